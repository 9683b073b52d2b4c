"""Metropolis-Hastings chain driver.

Single steps, fixed-schedule runs, and the adaptive loop that targets a
multivariate effective sample size: extend, halve-and-double the
interval once the retained sample exceeds twice the nominal size,
estimate burn-in from the geometric-decay fit, test convergence with
the two-window diagnostic, then either return (ESS at target) or
extrapolate the additional steps from the ESS-per-draw ratio.

Statistic values are tracked as offsets from the initial network's
statistics and re-based on output, which avoids large-magnitude
cancellation on big networks; infinite offset coefficients follow the
convention that their product with a zero change is zero.
"""

import math
import random
from dataclasses import dataclass, field

import numpy as np

from .diagnostics import estimate_burnin, geweke_test, multivariate_ess
from .errors import DataError

__all__ = ["SamplerConfig", "SampleMatrix", "mh_step", "run_chain",
           "sample_chains", "adaptive_run"]

_INF = math.inf


@dataclass
class SamplerConfig:
    samplesize: int = 1000
    burnin: int = 0
    interval: int = 1
    chains: int = 1
    seed: int = 0
    target_ess: float | None = None
    max_rounds: int = 100
    geweke_alpha: float = 0.05

    def __post_init__(self):
        if self.samplesize < 1 or self.interval < 1 or self.chains < 1:
            raise DataError("samplesize, interval and chains must be positive")
        if self.burnin < 0:
            raise DataError("burnin must be nonnegative")
        if self.target_ess is not None and self.target_ess <= 0:
            raise DataError("target_ess must be positive")


class SampleMatrix:
    """Retained draws of the statistic vector, possibly multi-chain."""

    def __init__(self, values, names, chain_ids=None, interval=1, burnin=0):
        self.values = np.asarray(values, dtype=float)
        if self.values.ndim == 1:
            self.values = self.values[:, None]
        self.names = list(names)
        self.chain_ids = (np.zeros(len(self.values), dtype=int)
                          if chain_ids is None else np.asarray(chain_ids, dtype=int))
        self.interval = interval
        self.burnin = burnin

    @property
    def S(self):
        return self.values.shape[0]

    @property
    def p(self):
        return self.values.shape[1]

    def per_chain(self):
        for c in np.unique(self.chain_ids):
            yield c, self.values[self.chain_ids == c]

    def mean(self):
        return self.values.mean(axis=0)


def _log_tilt(coefs, delta, sign):
    """sign * <coefs, delta> with 0 * inf = 0 and -inf dominating."""
    total = 0.0
    has_pos = has_neg = False
    for c, d in zip(coefs, delta):
        if d == 0.0:
            continue
        x = d if sign > 0 else -d
        if c == _INF:
            if x > 0.0:
                has_pos = True
            else:
                has_neg = True
        elif c == -_INF:
            if x > 0.0:
                has_neg = True
            else:
                has_pos = True
        else:
            total += c * x
    if has_neg:
        return -_INF
    if has_pos:
        return _INF
    return total


def mh_step(net, model, coefs, proposal, current_stats, rng, checker=None):
    """One Metropolis-Hastings step; mutates net when accepting.

    Returns (accepted, stats) where stats is the updated statistic
    vector (the same list object when the move is rejected).  A checker
    turns constraint-violating proposals into certain rejections, which
    is how plain proposals honor bd/blocks constraints.
    """
    i, j, log_q = proposal.propose(net, rng)
    if checker is not None and not checker.allowed(net, i, j):
        return False, current_stats
    adding = not net.has_edge(i, j)
    delta = model.change(net, i, j)
    log_ar = _log_tilt(coefs, delta, 1 if adding else -1) + log_q
    if log_ar >= 0.0 or (log_ar > -_INF and rng.random() < math.exp(log_ar)):
        net.toggle(i, j)
        proposal.commit(net, i, j, adding)
        if adding:
            return True, [c + d for c, d in zip(current_stats, delta)]
        return True, [c - d for c, d in zip(current_stats, delta)]
    return False, current_stats


def run_chain(net, model, coefs, proposal, config, checker=None, rng=None,
              collect=None):
    """Burn in, then retain `samplesize` draws every `interval` steps.

    Mutates `net` in place (it ends at the final state) and returns a
    SampleMatrix.  `collect`, when given, is called on the network at
    every retained draw and the results returned alongside, mirroring
    the user-function output mode of simulate.
    """
    if rng is None:
        rng = random.Random(config.seed)
    if len(coefs) != model.p:
        raise DataError(f"need {model.p} coefficients, got {len(coefs)}")
    base = model.summary(net)
    rel = [0.0] * model.p
    out = np.empty((config.samplesize, model.p), dtype=float)
    collected = [] if collect is not None else None

    for _ in range(config.burnin):
        _, rel = mh_step(net, model, coefs, proposal, rel, rng, checker)
    interval = config.interval
    for s in range(config.samplesize):
        for _ in range(interval):
            _, rel = mh_step(net, model, coefs, proposal, rel, rng, checker)
        out[s] = rel
        if collect is not None:
            collected.append(collect(net))
    out += np.asarray(base)
    sample = SampleMatrix(out, model.names, interval=interval, burnin=config.burnin)
    if collect is not None:
        return sample, collected
    return sample


def sample_chains(net, model, coefs, proposal_factory, config, checker=None,
                  workers=1, constraints=None, attrs=None):
    """Run config.chains independent chains from clones of `net`.

    Chain c uses seed seed+c.  Results are merged in chain order, so
    the output is identical whatever the worker count; the final
    networks are returned with the sample.  `proposal_factory` is
    called per chain with the chain's network clone (proposal state is
    chain-owned).  With workers > 1 the chains run in separate
    processes, which requires `constraints`/`attrs` instead of the
    factory (proposal state is rebuilt inside each worker).
    """
    if workers > 1 and config.chains > 1:
        payloads = [(net, model, list(coefs), constraints, attrs,
                     config.samplesize, config.burnin, config.interval,
                     config.seed + c) for c in range(config.chains)]
        from concurrent.futures import ProcessPoolExecutor
        with ProcessPoolExecutor(max_workers=min(workers, config.chains)) as ex:
            results = list(ex.map(_chain_worker, payloads))
        blocks = [values for values, _ in results]
        finals = [final for _, final in results]
        ids = [np.full(len(b), c, dtype=int) for c, b in enumerate(blocks)]
        return SampleMatrix(np.vstack(blocks), model.names,
                            np.concatenate(ids), interval=config.interval,
                            burnin=config.burnin), finals
    blocks = []
    ids = []
    finals = []
    for c in range(config.chains):
        chain_net = net.copy()
        proposal = proposal_factory(chain_net)
        rng = random.Random(config.seed + c)
        sm = run_chain(chain_net, model, coefs, proposal, config, checker, rng)
        blocks.append(sm.values)
        ids.append(np.full(sm.S, c, dtype=int))
        finals.append(chain_net)
    values = np.vstack(blocks)
    return SampleMatrix(values, model.names, np.concatenate(ids),
                        interval=config.interval, burnin=config.burnin), finals


def _chain_worker(payload):
    """Process-pool entry: rebuild the proposal and run one chain."""
    from .formula import ConstraintSpec
    from .proposals import make_proposal
    net, model, coefs, constraints, attrs, samplesize, burnin, interval, seed \
        = payload
    chain_net = net.copy()
    spec = constraints if constraints is not None else ConstraintSpec()
    proposal, checker = make_proposal(chain_net, spec, attrs)
    cfg = SamplerConfig(samplesize=samplesize, burnin=burnin,
                        interval=interval, seed=seed)
    sm = run_chain(chain_net, model, coefs, proposal, cfg, checker,
                   random.Random(seed))
    return sm.values, chain_net


@dataclass
class AdaptiveDiagnostics:
    rounds: int = 0
    converged: bool = False
    ess: float = 0.0
    interval: int = 1
    burnin_draws: int = 0
    geweke_p: float = float("nan")
    thinning_events: int = 0
    total_steps: int = 0
    history: list = field(default_factory=list)


def _direction_for(model, coefs):
    """Scalarization direction: the non-offset coefficients, normalized."""
    d = np.zeros(model.p)
    for k in model.free_index:
        d[k] = coefs[k]
    norm = float(np.linalg.norm(d))
    if norm < 1e-12:
        for k in model.free_index or range(model.p):
            d[k] = 1.0
        norm = float(np.linalg.norm(d))
    return d / norm


def adaptive_run(net, model, coefs, proposal, config, checker=None, rng=None):
    """Grow the chain until the multivariate ESS reaches target_ess.

    Returns (SampleMatrix of post-burn-in retained draws, diagnostics).
    The loop: (1) extend by samplesize*interval steps; (2) once the
    cumulative retained count exceeds 2*samplesize, drop every other
    draw and double the interval; (3) fit the geometric-decay burn-in;
    (4) run the two-window test after discarding the burn-in; (5) on
    nonconvergence continue; (6) return once the ESS of the retained
    draws meets the target; (7) otherwise extrapolate the additional
    steps from the current ESS-per-draw ratio and continue.
    """
    if config.target_ess is None:
        raise DataError("adaptive_run needs target_ess")
    if rng is None:
        rng = random.Random(config.seed)
    diag = AdaptiveDiagnostics(interval=config.interval)
    target = config.target_ess
    base = model.summary(net)
    rel = [0.0] * model.p
    rows = []
    interval = config.interval
    direction = _direction_for(model, coefs)

    for _ in range(config.burnin):
        _, rel = mh_step(net, model, coefs, proposal, rel, rng, checker)
        diag.total_steps += 1

    def extend(n_draws):
        nonlocal rel
        for _ in range(n_draws):
            for _ in range(interval):
                _, rel = mh_step(net, model, coefs, proposal, rel, rng, checker)
            rows.append(list(rel))
        diag.total_steps += n_draws * interval

    pending = config.samplesize
    for round_no in range(1, config.max_rounds + 1):
        diag.rounds = round_no
        extend(pending)
        # step 2: thin to keep the retained sample bounded
        while len(rows) > 2 * config.samplesize:
            rows = rows[1::2]
            interval *= 2
            diag.thinning_events += 1
        diag.interval = interval

        x = np.asarray(rows) + np.asarray(base)
        fit = estimate_burnin(x, direction)
        s0 = min(int(math.ceil(fit.s0)), len(rows))
        kept = x[s0:]
        diag.burnin_draws = s0
        # the two-window test needs 8 draws in its short (10%) window
        if len(kept) < max(80, model.p + 2):
            pending = config.samplesize
            diag.history.append(("too-short", len(kept)))
            continue
        pval = geweke_test(kept)
        diag.geweke_p = pval
        if pval < config.geweke_alpha:
            pending = config.samplesize
            diag.history.append(("nonconverged", pval))
            continue
        report = multivariate_ess(kept)
        diag.ess = report.ess
        diag.history.append(("ess", report.ess))
        if report.ess >= target:
            diag.converged = True
            return SampleMatrix(kept, model.names, interval=interval,
                                burnin=s0), diag
        # step 7: extrapolate the extra steps needed
        steps_needed = interval * config.samplesize * (target / max(report.ess, 1e-9) - 1.0)
        lo = interval * config.samplesize / 4
        hi = 16 * interval * config.samplesize
        steps = min(max(steps_needed, lo), hi)
        pending = max(1, int(steps / interval))
    # cap exceeded; hand back what we have, flagged
    x = np.asarray(rows) + np.asarray(base)
    s0 = diag.burnin_draws if diag.burnin_draws < len(rows) else 0
    return SampleMatrix(x[s0:], model.names, interval=interval, burnin=s0), diag
