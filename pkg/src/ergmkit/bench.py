"""Desk-scale efficiency benchmarks.

A synthetic heterosexual-population generator stands in for survey-
derived data: alternating or weighted sexes, categorical race with
configurable frequencies, uniform ages with squared and square-root
derived columns.  On top of it, trace benchmarks (statistics against
proposal count, from an empty start) and effective-sample-size
benchmarks (per-statistic ESS and ESS per second at equal proposal
counts) compare proposal variants that share one stationary
distribution.
"""

import random
import time
from dataclasses import dataclass, field

import numpy as np

from .diagnostics import univariate_ess
from .errors import DataError
from .network import Network, VertexAttributes
from .proposals import make_proposal
from .sampler import mh_step

__all__ = ["PopulationSpec", "generate_population", "mixing_benchmark",
           "ess_benchmark", "san_benchmark"]


@dataclass
class PopulationSpec:
    n: int = 1000
    sex_mode: str = "alternating"          # or "weighted"
    sex_freqs: dict = field(default_factory=lambda: {"M": 0.5, "F": 0.5})
    race_freqs: dict = field(default_factory=lambda: {"A": 0.5, "B": 0.3, "C": 0.2})
    age_low: float = 18.0
    age_high: float = 60.0


def generate_population(spec, seed=0):
    """Empty network plus sampled demographics, deterministic in seed."""
    if abs(sum(spec.race_freqs.values()) - 1.0) > 1e-9:
        raise DataError("race frequencies must sum to 1")
    rng = np.random.default_rng(seed)
    n = spec.n
    net = Network(n)
    attrs = VertexAttributes(n)
    if spec.sex_mode == "alternating":
        sex = ["M" if v % 2 == 0 else "F" for v in range(n)]
    elif spec.sex_mode == "weighted":
        labels = sorted(spec.sex_freqs)
        probs = [spec.sex_freqs[k] for k in labels]
        sex = list(rng.choice(labels, size=n, p=probs))
    else:
        raise DataError(f"unknown sex mode {spec.sex_mode!r}")
    races = sorted(spec.race_freqs)
    race = list(rng.choice(races, size=n, p=[spec.race_freqs[k] for k in races]))
    age = rng.uniform(spec.age_low, spec.age_high, size=n)
    attrs.add_categorical("sex", sex)
    attrs.add_categorical("race", race)
    attrs.add_numeric("age", age)
    attrs.add_numeric("agesq", age ** 2)
    attrs.add_numeric("sqrt.age", np.sqrt(age))
    return net, attrs


def _run_trace(net, attrs, model, coefs, constraints, total_proposals,
               trace_interval, seed):
    """One chain from `net`, recording statistics every trace_interval
    proposals; returns rows of (proposal_count, stats...)."""
    chain = net.copy()
    proposal, checker = make_proposal(chain, constraints, attrs)
    rng = random.Random(seed)
    stats = model.summary(chain)
    rows = []
    for step in range(1, total_proposals + 1):
        _, stats = mh_step(chain, model, coefs, proposal, stats, rng, checker)
        if step % trace_interval == 0:
            rows.append((step, list(stats)))
    return rows, chain


def mixing_benchmark(net, attrs, model, coefs, proposals, total_proposals,
                     trace_interval=1000, seed=0):
    """Statistic traces against proposal count for each proposal variant.

    `proposals` maps a display name to a ConstraintSpec; every chain
    starts from a copy of `net` (typically empty) and runs for the same
    number of proposals, so the traces are directly comparable.
    """
    out = {}
    for name, spec in proposals.items():
        rows, _ = _run_trace(net, attrs, model, coefs, spec, total_proposals,
                             trace_interval, seed)
        out[name] = rows
    return out


def ess_benchmark(net, attrs, model, coefs, proposals, samplesize,
                  interval=100, seed=0, warmup=None):
    """Per-statistic ESS and ESS per second at equal proposal counts.

    A warm-up run of `warmup` proposals (default one sampling interval
    worth) is discarded before timing starts; timing is wall-clock and
    single-threaded.
    """
    results = {}
    for name, spec in proposals.items():
        chain = net.copy()
        proposal, checker = make_proposal(chain, spec, attrs)
        rng = random.Random(seed)
        stats = model.summary(chain)
        burn = warmup if warmup is not None else interval
        for _ in range(burn):
            _, stats = mh_step(chain, model, coefs, proposal, stats, rng, checker)
        t0 = time.perf_counter()
        values = np.empty((samplesize, model.p))
        for s in range(samplesize):
            for _ in range(interval):
                _, stats = mh_step(chain, model, coefs, proposal, stats, rng,
                                   checker)
            values[s] = stats
        elapsed = time.perf_counter() - t0
        ess = np.array([univariate_ess(values[:, k]) for k in range(model.p)])
        results[name] = {
            "ess": ess,
            "ess_per_second": ess / max(elapsed, 1e-9),
            "seconds": elapsed,
            "values": values,
        }
    return results


def san_benchmark(net, attrs, model, targets, proposals, total_proposals,
                  trace_interval=1000, seed=0, invcov=None):
    """Annealing traces at fixed temperature zero for each proposal.

    The weight matrix defaults to the diagonal of reciprocal squared
    targets, normalized; statistics are recorded every trace_interval
    proposals so the approach to the targets can be compared.
    """
    from .san import SanConfig, san_run
    out = {}
    targets = np.asarray(targets, dtype=float)
    if invcov is None:
        with np.errstate(divide="ignore"):
            diag = 1.0 / np.where(targets != 0.0, targets, 1.0) ** 2
        invcov = np.diag(diag / diag.sum())
    for name, spec in proposals.items():
        chain = net.copy()
        config = SanConfig(targets=targets, runs=1, tau0=0.0,
                           invcov_override=invcov,
                           steps_per_run=total_proposals,
                           trace_interval=trace_interval, seed=seed)
        _, trace = san_run(chain, model, config, constraints=spec, attrs=attrs)
        out[name] = trace
    return out
