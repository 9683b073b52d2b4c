"""Estimation: pseudo-likelihood, Monte-Carlo MLE, contrastive divergence.

The pseudo-likelihood treats each free dyad as an independent Bernoulli
draw whose log-odds is the coefficient vector dotted with the dyad's
change score; maximizing it is a weighted logistic regression.  Naive
standard errors invert the negative Hessian J; the sandwich correction
J^-1 V(U) J^-1 estimates V(U) as the covariance of the estimating
function over an MCMC sample drawn with the fitted value as the truth.

The Monte-Carlo MLE update maximizes the importance-sampled likelihood
ratio against the previous iterate; the observed statistic is first
pulled toward the simulated-sample centroid until it is deep inside the
sample's convex hull, which guarantees a finite unique maximizer.
Three stopping rules are provided: an autocorrelation-adjusted
Hotelling test of a zero estimating function, the two-consecutive-
iterations hull-depth rule, and an equivalence test on an upper
confidence bound of the Mahalanobis distance.
"""

import math
import random
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .diagnostics import batch_means_cov
from .errors import DataError, SeparationError, SingularityError
from .hull import boundary_multiplier, scale_into_hull
from .proposals import make_proposal
from .sampler import SamplerConfig, adaptive_run, mh_step, run_chain
from .formula import ConstraintSpec

__all__ = ["MpleRows", "FitResult", "ScoreEval", "McmleControl", "mple_rows",
           "logistic_fit", "mple", "mcmle_step", "check_termination",
           "mcmle_fit", "cd_fit"]

_INF = math.inf


@dataclass
class MpleRows:
    """Response/predictor extraction over the free dyads.

    compressed: unique (response, predictor, offset-change) rows with
    multiplicities; array: tail x head x statistic cube with NaN where
    no free dyad exists; dyadlist: one row per free dyad with 1-based
    endpoints.  Predictor columns are the non-offset statistics; the
    offset statistics' change scores are kept alongside so fixed
    coefficients enter the fit as per-row shifts.
    """

    mode: str
    response: np.ndarray
    predictor: np.ndarray
    weights: np.ndarray
    offsets: np.ndarray
    names: list
    offset_names: list
    dyads: np.ndarray = None
    array: np.ndarray = None


@dataclass
class ScoreEval:
    U: np.ndarray
    observed: np.ndarray
    simulated_mean: np.ndarray
    covariance: np.ndarray


@dataclass
class FitResult:
    coefs: np.ndarray          # full length p, offsets at their fixed values
    vcov: np.ndarray           # over free coordinates
    names: list
    free_index: list
    se_kind: str = "naive"
    iterations: int = 0
    converged: bool = True
    termination: str = ""
    termination_stat: float = float("nan")
    sample: object = None
    score: object = None       # ScoreEval of the final iteration
    loglik: object = None

    @property
    def free_coefs(self):
        return np.asarray([self.coefs[k] for k in self.free_index])

    def standard_errors(self):
        return np.sqrt(np.clip(np.diag(self.vcov), 0.0, None))


def mple_rows(net, model, mode="compressed"):
    """Enumerate free dyads: response, change scores, multiplicities."""
    if mode not in ("compressed", "array", "dyadlist"):
        raise DataError(f"unknown MPLE output mode {mode!r}")
    free = model.free_index
    off = model.offset_index
    names = [model.names[k] for k in free]
    offset_names = [model.names[k] for k in off]

    if mode == "array":
        cube = np.full((net.n, net.n, model.p), np.nan)
        for k in range(net.dyad_count()):
            i, j = net.dyad_at(k)
            delta = model.change(net, i, j)
            cube[i, j, :] = delta
            if not net.directed:
                cube[j, i, :] = delta
        return MpleRows(mode=mode, response=None, predictor=None, weights=None,
                        offsets=None, names=list(model.names),
                        offset_names=offset_names, array=cube)

    rows = {}
    order = []
    dyads = []
    listed = []
    for k in range(net.dyad_count()):
        i, j = net.dyad_at(k)
        delta = model.change(net, i, j)
        y = 1 if net.has_edge(i, j) else 0
        pred = tuple(delta[c] for c in free)
        offv = tuple(delta[c] for c in off)
        if mode == "dyadlist":
            dyads.append((i + 1, j + 1))
            listed.append((y, pred, offv))
        else:
            key = (y, pred, offv)
            if key in rows:
                rows[key] += 1
            else:
                rows[key] = 1
                order.append(key)
    if mode == "dyadlist":
        resp = np.array([r[0] for r in listed], dtype=float)
        pred = np.array([r[1] for r in listed], dtype=float).reshape(len(listed), len(free))
        offv = np.array([r[2] for r in listed], dtype=float).reshape(len(listed), len(off))
        return MpleRows(mode=mode, response=resp, predictor=pred,
                        weights=np.ones(len(listed)), offsets=offv,
                        names=names, offset_names=offset_names,
                        dyads=np.array(dyads, dtype=int))
    resp = np.array([k[0] for k in order], dtype=float)
    pred = np.array([k[1] for k in order], dtype=float).reshape(len(order), len(free))
    offv = np.array([k[2] for k in order], dtype=float).reshape(len(order), len(off))
    wts = np.array([rows[k] for k in order], dtype=float)
    return MpleRows(mode=mode, response=resp, predictor=pred, weights=wts,
                    offsets=offv, names=names, offset_names=offset_names)


def _offset_shift(offsets, offset_coefs):
    """Per-row shift from fixed coefficients, with 0 * inf = 0.

    When conflicting infinities meet on one dyad, -inf wins (the dyad
    stays forbidden).
    """
    n = len(offsets)
    finite = np.zeros(n)
    pos_inf = np.zeros(n, dtype=bool)
    neg_inf = np.zeros(n, dtype=bool)
    for c, coef in enumerate(offset_coefs):
        col = offsets[:, c]
        if math.isinf(coef):
            up = col > 0 if coef > 0 else col < 0
            dn = col < 0 if coef > 0 else col > 0
            pos_inf |= up
            neg_inf |= dn
        else:
            finite += coef * col
    shift = finite
    shift[pos_inf] = _INF
    shift[neg_inf] = -_INF
    return shift


def logistic_fit(predictor, response, weights=None, shift=None, tol=1e-10,
                 max_iter=100):
    """Weighted logistic regression by Newton-Raphson.

    Returns (coefs, J) with J the negative Hessian at the optimum.
    Rows whose shift is -inf (or +inf) are structurally determined: the
    response must match, and the row drops out of the fit.  Divergence
    with a non-vanishing gradient raises SeparationError; a rank-
    deficient design raises SingularityError naming a null direction.
    """
    X = np.asarray(predictor, dtype=float)
    y = np.asarray(response, dtype=float)
    w = np.ones(len(y)) if weights is None else np.asarray(weights, dtype=float)
    o = np.zeros(len(y)) if shift is None else np.asarray(shift, dtype=float)

    determined = np.isinf(o)
    if determined.any():
        bad_one = determined & (o < 0) & (y > 0.5)
        bad_zero = determined & (o > 0) & (y < 0.5)
        if bad_one.any() or bad_zero.any():
            raise DataError("observed state contradicts an infinite offset "
                            "(a forbidden dyad hosts an edge)")
        keep = ~determined
        X, y, w, o = X[keep], y[keep], w[keep], o[keep]
    if len(y) == 0 or X.shape[1] == 0:
        return np.zeros(X.shape[1]), np.zeros((X.shape[1], X.shape[1]))

    sw = np.sqrt(w)
    sv = np.linalg.svd(X * sw[:, None], compute_uv=True)
    if sv[1][-1] <= 1e-10 * max(sv[1][0], 1.0):
        null = sv[2][-1]
        raise SingularityError(
            f"design matrix is column-rank deficient; null direction {null}")

    beta = np.zeros(X.shape[1])
    for _ in range(max_iter):
        eta = X @ beta + o
        p = 1.0 / (1.0 + np.exp(-np.clip(eta, -700, 700)))
        grad = X.T @ (w * (y - p))
        if np.abs(grad).max() < tol:
            break
        wt = w * p * (1.0 - p)
        H = (X * wt[:, None]).T @ X
        try:
            step = np.linalg.solve(H, grad)
        except np.linalg.LinAlgError:
            raise SeparationError("logistic Hessian became singular "
                                  "(separated data)")
        beta = beta + step
        if np.abs(beta).max() > 50.0 and np.abs(grad).max() > 1e-6:
            raise SeparationError("coefficients diverging; data are separable")
    else:
        if np.abs(grad).max() > 1e-6:
            raise SeparationError("logistic fit failed to converge")
    eta = X @ beta + o
    p = 1.0 / (1.0 + np.exp(-np.clip(eta, -700, 700)))
    if np.abs(beta).max() > 15.0 and np.abs(y - p).max() < 1e-7:
        # the maximizer ran to the boundary: a perfect fit with huge
        # log-odds means the data are separated
        raise SeparationError("coefficients diverging; data are separable")
    wt = w * p * (1.0 - p)
    J = (X * wt[:, None]).T @ X
    return beta, J


def pseudo_loglik(predictor, response, weights, shift, beta):
    """Weighted Bernoulli log-likelihood of the dyad-wise model."""
    keep = ~np.isinf(shift)
    eta = predictor[keep] @ beta + shift[keep]
    y = response[keep]
    w = weights[keep]
    return float(np.sum(w * (y * eta - np.logaddexp(0.0, eta))))


def _blocked_shift(net, model, constraints, attrs, rows):
    """-inf shifts for dyads frozen by a blocks constraint."""
    if constraints is None or constraints.blocks_attr is None:
        return np.zeros(len(rows.response))
    from .proposals import ConstraintChecker
    spec = ConstraintSpec(blocks_attr=constraints.blocks_attr,
                          blocks_levels2=constraints.blocks_levels2)
    checker = ConstraintChecker(net, spec, attrs)
    lev, forbid = checker.block_level, checker.forbid
    if rows.mode != "dyadlist":
        raise DataError("blocked-dyad shifts need dyadlist extraction")
    shift = np.zeros(len(rows.response))
    for r, (t, h) in enumerate(rows.dyads):
        if forbid[lev[t - 1]][lev[h - 1]]:
            shift[r] = -_INF
    return shift


def mple(net, model, offset_coefs=(), se="naive", constraints=None, attrs=None,
         samplesize=1000, interval=None, burnin=None, seed=0):
    """Maximum pseudo-likelihood fit with naive or sandwich variance.

    Degree-cap constraints are ignored at this stage (the logistic fit
    cannot express them); blocks constraints enter as -inf shifts on
    the frozen dyads.  The sandwich middle term is the covariance of
    the pseudo-likelihood estimating function over an MCMC sample drawn
    with the fitted coefficients as the true values.
    """
    use_blocks = constraints is not None and constraints.blocks_attr is not None
    rows = mple_rows(net, model, mode="dyadlist" if use_blocks else "compressed")
    shift = _offset_shift(rows.offsets, list(offset_coefs))
    if use_blocks:
        shift = shift + _blocked_shift(net, model, constraints, attrs, rows)
    beta, J = logistic_fit(rows.predictor, rows.response, rows.weights, shift)
    try:
        vcov = np.linalg.inv(J)
    except np.linalg.LinAlgError:
        vcov = np.linalg.pinv(J)
    coefs = model.assemble_coefs(beta, list(offset_coefs))
    result = FitResult(coefs=np.asarray(coefs), vcov=vcov, names=model.names,
                       free_index=model.free_index, se_kind=se, iterations=1,
                       termination="mple")
    if se == "naive":
        return result
    if se != "sandwich":
        raise DataError(f"unknown se kind {se!r}")

    N = net.dyad_count()
    if interval is None:
        interval = max(1, N // 2)
    if burnin is None:
        burnin = 10 * interval
    spec = constraints if constraints is not None else ConstraintSpec()
    sim_net = net.copy()
    proposal, checker = make_proposal(sim_net, spec, attrs)
    free = model.free_index

    def score(nw):
        u = np.zeros(len(free))
        for k in range(nw.dyad_count()):
            i, j = nw.dyad_at(k)
            delta = model.change(nw, i, j)
            eta = 0.0
            forced = 0
            for c, d in zip(coefs, delta):
                if d == 0.0:
                    continue
                if math.isinf(c):
                    forced = -1 if ((c > 0) != (d > 0) or forced < 0) else 1
                else:
                    eta += c * d
            if forced:
                p_ij = 1.0 if forced > 0 else 0.0
            else:
                p_ij = 1.0 / (1.0 + math.exp(-min(max(eta, -700.0), 700.0)))
            resid = (1.0 if nw.has_edge(i, j) else 0.0) - p_ij
            for c, kf in enumerate(free):
                u[c] += delta[kf] * resid
        return u

    cfg = SamplerConfig(samplesize=samplesize, interval=interval,
                        burnin=burnin, seed=seed)
    _, scores = run_chain(sim_net, model, list(coefs), proposal, cfg,
                          checker=checker, collect=score)
    V = np.cov(np.asarray(scores), rowvar=False).reshape(len(free), len(free))
    result.vcov = vcov @ V @ vcov
    return result


@dataclass
class McmleControl:
    samplesize: int = 1024
    interval: int = None           # default: half the free-dyad count
    burnin: int = None             # default: 16 * interval on first round
    target_ess: float = None       # adaptive sampling when set
    maxit: int = 60
    termination: str = "confidence"
    hotelling_alpha: float = 0.5
    confidence_alpha: float = 0.05
    confidence_delta: float = 0.25
    hull_depth: float = 0.95
    newton_tol: float = 1e-8
    seed: int = 0
    steplength_margin: float = None    # alias of hull_depth when set


@dataclass
class _IterationRecord:
    theta: np.ndarray
    sample: np.ndarray        # free columns, absolute statistics
    g_obs: np.ndarray
    gamma: float


def _reduce_support(sample):
    """Orthonormal basis of the sample's spanned directions."""
    mean = sample.mean(axis=0)
    centered = sample - mean
    if centered.shape[0] < 2:
        raise DataError("need at least two draws")
    _, svals, vt = np.linalg.svd(centered, full_matrices=False)
    scale = svals[0] if svals.size and svals[0] > 0 else 1.0
    keep = svals > 1e-10 * scale
    return mean, vt[keep].T   # p_free x r


def mcmle_step(theta_t, sample, g_obs, depth=0.95, tol=1e-8, max_iter=200):
    """One Monte-Carlo MLE update from a sample drawn at theta_t.

    Maximizes <theta - theta_t, g_obs> - log mean exp<theta - theta_t,
    g_s> by Newton with backtracking, after pulling g_obs toward the
    sample centroid so the maximizer exists.  Returns (theta_next,
    info) where info carries the hull multiplier, the tilted
    covariance, and the surrogate objective gain.
    """
    theta_t = np.asarray(theta_t, dtype=float)
    sample = np.asarray(sample, dtype=float)
    g_obs = np.asarray(g_obs, dtype=float)
    mean, basis = _reduce_support(sample)
    resid = (g_obs - mean) - basis @ (basis.T @ (g_obs - mean))
    scale = max(float(np.abs(sample).max()), 1.0)
    if np.abs(resid).max() > 1e-6 * scale:
        raise SingularityError("observed statistic is not spanned by the "
                               "simulated sample")
    gamma = boundary_multiplier(sample, g_obs)
    g_work = scale_into_hull(sample, g_obs, depth=depth)

    Z = (sample - mean) @ basis
    z_obs = (g_work - mean) @ basis
    delta = np.zeros(Z.shape[1])

    def objective(d):
        t = Z @ d
        m = t.max()
        return float(d @ z_obs - (m + math.log(np.mean(np.exp(t - m)))))

    f_cur = objective(delta)
    f0 = f_cur
    for _ in range(max_iter):
        t = Z @ delta
        t -= t.max()
        w = np.exp(t)
        w /= w.sum()
        g_mean = w @ Z
        grad = z_obs - g_mean
        if np.abs(grad).max() < tol * max(1.0, np.abs(z_obs).max()):
            break
        centered = Z - g_mean
        H = (centered * w[:, None]).T @ centered
        try:
            step = np.linalg.solve(H, grad)
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(H, grad, rcond=None)[0]
        lam = 1.0
        while lam > 1e-8:
            cand = delta + lam * step
            f_new = objective(cand)
            if f_new >= f_cur - 1e-12:
                delta = cand
                f_cur = f_new
                break
            lam *= 0.5
        else:
            break
    theta_next = theta_t + basis @ delta
    t = Z @ delta
    t -= t.max()
    w = np.exp(t)
    w /= w.sum()
    g_mean = w @ Z
    centered = Z - g_mean
    H = (centered * w[:, None]).T @ centered
    tilted_cov = basis @ H @ basis.T
    info = {"gamma": gamma, "objective_gain": f_cur - f0,
            "tilted_cov": tilted_cov, "scaled_obs": g_work}
    return theta_next, info


def check_termination(kind, history, control=None):
    """Evaluate a stopping rule on the iteration history.

    Returns (stop, statistic) where the statistic is the p-value for
    hotelling, the hull multiplier for hummel, and the Mahalanobis
    upper confidence bound for confidence.
    """
    control = control or McmleControl()
    if kind not in ("hotelling", "hummel", "confidence"):
        raise DataError(f"unknown termination rule {kind!r}")
    if not history:
        return False, float("nan")
    rec = history[-1]
    sample = rec.sample
    S = len(sample)
    U = rec.g_obs - sample.mean(axis=0)

    if kind == "hummel":
        if len(history) < 2:
            return False, rec.gamma
        need = 1.0 / control.hull_depth
        ok = history[-1].gamma >= need and history[-2].gamma >= need
        return ok, rec.gamma

    mean, basis = _reduce_support(sample)
    u_r = basis.T @ U
    resid = U - basis @ u_r
    if np.abs(resid).max() > 1e-6 * max(1.0, float(np.abs(sample).max())):
        return False, 0.0 if kind == "hotelling" else math.inf
    Z = (sample - mean) @ basis
    p = Z.shape[1]

    if kind == "hotelling":
        sigma = batch_means_cov(Z)
        cov_mean = sigma / S
        try:
            t2 = float(u_r @ np.linalg.solve(cov_mean, u_r))
        except np.linalg.LinAlgError:
            t2 = float(u_r @ np.linalg.pinv(cov_mean) @ u_r)
        nu = S // int(math.isqrt(S)) - 1
        if nu - p + 1 <= 0:
            pval = float(stats.chi2.sf(t2, p))
        else:
            pval = float(stats.f.sf(t2 * (nu - p + 1) / (nu * p), p, nu - p + 1))
        return pval > control.hotelling_alpha, pval

    # confidence: equivalence test on the Mahalanobis distance bound
    lam = np.cov(Z, rowvar=False).reshape(p, p)
    sigma = batch_means_cov(Z) / S
    try:
        lam_inv = np.linalg.inv(lam)
    except np.linalg.LinAlgError:
        lam_inv = np.linalg.pinv(lam)
    d2 = float(u_r @ lam_inv @ u_r)
    inner = lam_inv @ sigma
    var_d2 = float(4.0 * u_r @ lam_inv @ sigma @ lam_inv @ u_r
                   + 2.0 * np.trace(inner @ inner))
    z = stats.norm.ppf(1.0 - control.confidence_alpha)
    ucb = math.sqrt(max(d2, 0.0) + z * math.sqrt(max(var_d2, 0.0)))
    return ucb < control.confidence_delta, ucb


def _default_interval(net):
    return max(1, net.dyad_count() // 2)


def mcmle_fit(net, model, g_obs=None, offset_coefs=(), constraints=None,
              attrs=None, init="mple", control=None):
    """Iterated Monte-Carlo maximum likelihood.

    `net` is the starting (and observed) network; pass `g_obs` to
    target other sufficient statistics, e.g. from an annealed starting
    network.  `init` is "mple", "cd", or an explicit free-coefficient
    vector.  Returns a FitResult whose covariance is the inverse of the
    tilted statistic covariance at the final iterate.
    """
    control = control or McmleControl()
    spec = constraints if constraints is not None else ConstraintSpec()
    full_obs = np.asarray(model.summary(net) if g_obs is None else g_obs,
                          dtype=float)
    if full_obs.shape != (model.p,):
        raise DataError(f"observed statistics must have length {model.p}")
    free = model.free_index
    obs_free = full_obs[free]

    if isinstance(init, str):
        if init == "mple" and spec.bd_maxout is None and spec.bd_maxin is None:
            start = mple(net, model, offset_coefs, constraints=constraints,
                         attrs=attrs)
            theta = start.free_coefs
        elif init in ("mple", "cd"):
            theta = cd_fit(net, model, offset_coefs=offset_coefs,
                           constraints=constraints, attrs=attrs,
                           seed=control.seed)
        else:
            raise DataError(f"unknown init method {init!r}")
    else:
        theta = np.asarray(init, dtype=float)
        if theta.shape != (len(free),):
            raise DataError(f"init vector must have length {len(free)}")

    sim_net = net.copy()
    proposal, checker = make_proposal(sim_net, spec, attrs)
    interval = control.interval or _default_interval(net)
    burnin = control.burnin if control.burnin is not None else 16 * interval
    depth = control.steplength_margin or control.hull_depth
    rng = random.Random(control.seed)

    history = []
    info = {"tilted_cov": None}
    converged = False
    stat = float("nan")
    for it in range(1, control.maxit + 1):
        coefs = model.assemble_coefs(theta, list(offset_coefs))
        if control.target_ess is not None:
            cfg = SamplerConfig(samplesize=control.samplesize, interval=interval,
                                burnin=burnin if it == 1 else interval,
                                seed=control.seed + it,
                                target_ess=control.target_ess)
            sm, _adiag = adaptive_run(sim_net, model, coefs, proposal, cfg,
                                      checker=checker, rng=rng)
        else:
            cfg = SamplerConfig(samplesize=control.samplesize, interval=interval,
                                burnin=burnin if it == 1 else interval,
                                seed=control.seed + it)
            sm = run_chain(sim_net, model, coefs, proposal, cfg,
                           checker=checker, rng=rng)
        sample_free = sm.values[:, free]
        gamma = boundary_multiplier(sample_free, obs_free)
        history.append(_IterationRecord(theta=theta.copy(), sample=sample_free,
                                        g_obs=obs_free, gamma=gamma))
        stop, stat = check_termination(control.termination, history, control)
        if stop:
            converged = True
            break
        theta, info = mcmle_step(theta, sample_free, obs_free, depth=depth,
                                 tol=control.newton_tol)

    rec = history[-1]
    if info.get("tilted_cov") is None or converged:
        # at termination the sample was drawn at the final iterate, so
        # the Fisher information estimate is the plain sample covariance
        fisher = np.cov(rec.sample, rowvar=False).reshape(len(free), len(free))
    else:
        fisher = info["tilted_cov"]
    try:
        vcov = np.linalg.inv(fisher)
    except np.linalg.LinAlgError:
        vcov = np.linalg.pinv(fisher)
    coefs = model.assemble_coefs(theta, list(offset_coefs))
    sim_mean = rec.sample.mean(axis=0)
    score = ScoreEval(U=obs_free - sim_mean, observed=obs_free,
                      simulated_mean=sim_mean, covariance=fisher)
    return FitResult(coefs=np.asarray(coefs), vcov=vcov, names=model.names,
                     free_index=free, se_kind="fisher", iterations=len(history),
                     converged=converged,
                     termination=f"{control.termination}" +
                                 ("" if converged else " (iteration cap)"),
                     termination_stat=stat,
                     sample=SampleFreeView(rec.sample,
                                           [model.names[k] for k in free]),
                     score=score)


class SampleFreeView:
    """Minimal sample holder attached to fit results."""

    def __init__(self, values, names):
        self.values = np.asarray(values)
        self.names = names

    @property
    def S(self):
        return len(self.values)


def cd_fit(net, model, offset_coefs=(), k=8, rounds=160, minibatch=24,
           gain=0.5, constraints=None, attrs=None, seed=0):
    """Contrastive-divergence estimate from k-step restarts at the data.

    Robbins-Monro on the k-step score: each round runs `minibatch`
    chains of k Metropolis-Hastings steps from the observed network and
    moves the coefficients along the (covariance-whitened) difference
    between observed and simulated statistics.  Intended as a starting
    value where the pseudo-likelihood is unavailable, e.g. under
    dyad-dependent sample-space constraints.
    """
    spec = constraints if constraints is not None else ConstraintSpec()
    g_obs = np.asarray(model.summary(net), dtype=float)
    free = model.free_index
    obs_free = g_obs[free]
    rng = random.Random(seed)
    theta = np.zeros(len(free))
    trail = []

    for m in range(1, rounds + 1):
        coefs = model.assemble_coefs(theta, list(offset_coefs))
        sims = np.empty((minibatch, len(free)))
        for b in range(minibatch):
            chain = net.copy()
            chain_prop, chain_check = make_proposal(chain, spec, attrs)
            stats_vec = list(g_obs)
            for _ in range(k):
                _, stats_vec = mh_step(chain, model, coefs, chain_prop,
                                       stats_vec, rng, chain_check)
            sims[b] = [stats_vec[c] for c in free]
        u = obs_free - sims.mean(axis=0)
        cov = np.cov(sims, rowvar=False).reshape(len(free), len(free))
        ridge = 1e-3 * max(float(np.trace(cov)) / max(len(free), 1), 1e-6)
        try:
            direction = np.linalg.solve(cov + ridge * np.eye(len(free)), u)
        except np.linalg.LinAlgError:
            direction = u / max(float(np.trace(cov)), 1.0)
        a_m = gain / (1.0 + m / 20.0)
        theta = theta + a_m * direction
        if np.abs(theta).max() > 50.0:
            raise SeparationError("contrastive divergence diverged")
        if m > rounds // 2:
            trail.append(theta.copy())
    return np.mean(trail, axis=0) if trail else theta
