"""Linear and quadratic programs over interval schedules.

Every distribution strategy is a composition of three problem shapes over
the schedule polytope (variables: window starts ``a`` and lengths ``f``):

* maximise total flexibility ``sum(f)``;
* maximise the smallest flexibility ``min(f)``;
* weighted least-squares equalisation ``sum(w * (F - f)**2)``, optionally with
  a lower bound on every ``f_t`` and a fixed total.

All three are solved by one dense primal-dual interior-point routine
(Mehrotra predictor-corrector).  Stages that pin a previous optimum (total
flexibility equal to its maximum, lower bound equal to the max-min value)
have no strictly feasible point; those are handled by restricting to the
optimal face of the earlier LP, read off the strictly complementary dual
solution the interior-point method converges to.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
from scipy.optimize import nnls

from flexsched.flex import canonicalize, InfeasibleFlexibilities
from flexsched.instance import Instance, temporal_profile


class InfeasibleProblem(ValueError):
    pass


class InfeasibleSpec(ValueError):
    pass


class SolverError(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# interior point core


def _gram(G: np.ndarray, d: np.ndarray) -> np.ndarray:
    return G.T @ (d[:, None] * G)


_TRACE = False


def _robust_cholesky(M):
    # z/s spans many decades near convergence; regularise only if needed
    delta = 0.0
    base = max(float(np.abs(np.diag(M)).max()), 1.0)
    while True:
        try:
            return sla.cho_factor(M + delta * np.eye(len(M)), check_finite=False)
        except np.linalg.LinAlgError:
            delta = base * 1e-14 if delta == 0.0 else delta * 100
            if delta > base * 1e-4:
                raise SolverError("normal equations not positive definite")


def ipm(H, c, G, h, tol: float = 1e-9, gap_tol: float = 1e-12, max_iter: int = 100):
    """Solve ``min 0.5 x'Hx + c'x  s.t.  Gx <= h`` for PSD ``H``.

    Returns ``(x, s, z)`` with slacks ``s`` and multipliers ``z``.  ``H + G'DG``
    must be positive definite for positive diagonal ``D`` (i.e. the feasible
    region is bounded or ``H`` covers the unbounded directions).
    """
    with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
        return _ipm(H, c, G, h, tol, gap_tol, max_iter)


def _ipm(H, c, G, h, tol, gap_tol, max_iter):
    m = len(h)
    if m == 0:
        x = sla.solve(H, -c, assume_a="pos")
        return x, np.zeros(0), np.zeros(0)
    x = sla.solve(H + G.T @ G, -c + G.T @ h, assume_a="pos")
    s = h - G @ x
    z = -s.copy()
    if s.min() <= 0:
        s += 1.0 - min(s.min(), 0.0)
    if z.min() <= 0:
        z += 1.0 - min(z.min(), 0.0)

    scale_p = 1.0 + np.abs(h).max()
    scale_d = 1.0 + max(np.abs(c).max(), np.abs(H).max())
    # separate primal/dual step lengths are only valid when H = 0: otherwise
    # the dual residual couples x and z
    is_lp = not np.any(H)
    best, best_merit = None, np.inf
    for it in range(max_iter):
        rd = H @ x + c + G.T @ z
        rp = G @ x + s - h
        mu = s @ z / m
        erp, erd = np.abs(rp).max() / scale_p, np.abs(rd).max() / scale_d
        if _TRACE:
            print(f"ipm {it:3d} rp={erp:.2e} rd={erd:.2e} mu={mu:.2e}")
        if erp <= tol and erd <= tol and mu <= gap_tol * scale_p:
            return x, s, z
        merit = max(erp, erd, mu / scale_p)
        if merit < best_merit:
            best, best_merit = (x, s, z), merit
        elif mu <= gap_tol * scale_p and merit > 1e3 * best_merit:
            break  # lost accuracy near the boundary; keep the best iterate
        d = z / s
        M = H + _gram(G, d)
        cho = _robust_cholesky(M)

        def newton(rc):
            rhs = -rd - G.T @ ((-rc + z * rp) / s)
            dx = sla.cho_solve(cho, rhs, check_finite=False)
            for _ in range(2):  # iterative refinement against the unregularised matrix
                dx = dx + sla.cho_solve(cho, rhs - M @ dx, check_finite=False)
            gdx = G @ dx
            dz = (-rc + z * rp) / s + d * gdx
            ds = -rp - gdx
            return dx, ds, dz

        def max_step(v, dv):
            neg = dv < 0
            return min(1.0, float(np.min(-v[neg] / dv[neg]))) if neg.any() else 1.0

        dx, ds, dz = newton(s * z)
        ap, ad = max_step(s, ds), max_step(z, dz)
        mu_aff = (s + ap * ds) @ (z + ad * dz) / m
        sigma = (mu_aff / mu) ** 3
        dx, ds, dz = newton(s * z + ds * dz - sigma * mu)
        eta = 0.995
        ap, ad = eta * max_step(s, ds), eta * max_step(z, dz)
        if not is_lp:
            ap = ad = min(ap, ad)
        x = x + ap * dx
        s = s + ap * ds
        z = z + ad * dz
    if best is not None and best_merit <= 1e3 * max(tol, gap_tol):
        return best
    x, s, z = best if best is not None else (x, s, z)
    rp = G @ x + s - h
    rd = H @ x + c + G.T @ z
    raise SolverError(
        f"interior point did not converge: |rp|={np.abs(rp).max():.3e} |rd|={np.abs(rd).max():.3e} mu={s @ z / m:.3e}"
    )


# ---------------------------------------------------------------------------
# the schedule polytope


@dataclass
class FeasibleSet:
    """Schedules of ``instance`` finishing by ``deadline``.

    Constraint rows over ``x = (a, f)``, in this order: ``a_t >= 0`` (N rows),
    ``f_t >= lb`` (N), ``a_t + f_t + l_t <= a_u`` per edge (E), and
    ``a_t + f_t + l_t <= deadline`` (N).
    """

    instance: Instance
    deadline: float
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        prof = temporal_profile(self.instance, 1.0)
        if self.deadline < prof.makespan - 1e-9:
            raise InfeasibleProblem(f"deadline {self.deadline} below makespan {prof.makespan}")

    @classmethod
    def from_factor(cls, instance: Instance, deadline_factor: float = 1.1) -> "FeasibleSet":
        return cls(instance, temporal_profile(instance, deadline_factor).deadline)

    @property
    def n(self) -> int:
        return self.instance.n_tasks

    def rows(self, lb: float = 0.0, extra_cols: int = 0) -> tuple[np.ndarray, np.ndarray]:
        n, inst = self.n, self.instance
        l = inst.durations
        E = inst.n_edges
        G = np.zeros((3 * n + E, 2 * n + extra_cols))
        h = np.zeros(3 * n + E)
        idx = np.arange(n)
        G[idx, idx] = -1.0
        G[n + idx, n + idx] = -1.0
        h[n:2 * n] = -lb
        if E:
            e = np.asarray(inst.edges)
            r = 2 * n + np.arange(E)
            G[r, e[:, 0]] = 1.0
            G[r, n + e[:, 0]] = 1.0
            G[r, e[:, 1]] = -1.0
            h[r] = -l[e[:, 0]]
        r = 2 * n + E + idx
        G[r, idx] = 1.0
        G[r, n + idx] = 1.0
        h[r] = self.deadline - l
        return G, h


@dataclass(frozen=True)
class EqualiseSpec:
    targets: np.ndarray
    weights: np.ndarray
    lower_bound: float = 0.0
    total_flex_equals: float | None = None

    def __post_init__(self):
        if np.any(np.asarray(self.weights) <= 0):
            raise ValueError("weights must be positive")
        if self.lower_bound < 0:
            raise ValueError("lower_bound must be >= 0")


def _solve_on(G, h, eq_rows, H, c):
    """Minimise over ``{Gx <= h, G[eq_rows] x = h[eq_rows]}``; returns x and
    full-length slack/multiplier vectors (equality rows report s=0, z=nan)."""
    m, nx = G.shape
    eq = np.zeros(m, dtype=bool)
    eq[list(eq_rows)] = True
    if not eq.any():
        x, s, z = ipm(H, c, G, h)
        return x, s, z
    A, b = G[eq], h[eq]
    x0 = np.linalg.lstsq(A, b, rcond=None)[0]
    Z = sla.null_space(A, rcond=1e-10)
    if np.abs(A @ x0 - b).max() > 1e-7 * (1 + np.abs(b).max()):
        raise InfeasibleSpec("equality system inconsistent")
    Gi, hi = G[~eq] @ Z, h[~eq] - G[~eq] @ x0
    s_full = np.zeros(m)
    z_full = np.full(m, np.nan)
    if Z.shape[1] == 0:
        x = x0
        s_full[~eq] = hi
    else:
        live = np.abs(Gi).max(axis=1) > 1e-12
        if np.any(hi[~live] < -1e-9):
            raise InfeasibleSpec("face restriction left an infeasible constant row")
        u, s, z = ipm(Z.T @ H @ Z, Z.T @ (H @ x0 + c), Gi[live], hi[live])
        x = x0 + Z @ u
        s_i, z_i = hi - Gi @ u, np.zeros(len(hi))
        s_i[live], z_i[live] = s, z
        s_full[~eq], z_full[~eq] = s_i, z_i
    return x, s_full, z_full


def _active(s, z, eq_rows):
    act = set(eq_rows)
    act.update(np.flatnonzero(np.nan_to_num(z, nan=0.0) > s).tolist())
    return frozenset(act)


def _polish(G, h, act, x):
    """Snap an interior-point LP solution onto its identified optimal face."""
    if not act:
        return x
    A = G[sorted(act)]
    xp = x + np.linalg.lstsq(A, h[sorted(act)] - A @ x, rcond=None)[0]
    if np.max(G @ xp - h) <= 1e-9 * (1 + np.abs(h).max()):
        return xp
    return x


def _qp_polish(G, h, H, c, x, s, z, eq_rows):
    """Re-solve the QP with its identified active rows as equalities.

    Interior-point iterates approach degenerate optima (active rows with zero
    multiplier) only like sqrt(mu); the equality-constrained solve lands on
    the face exactly.  Accepted only if feasible and no worse.
    """
    scale = 1.0 + np.abs(h).max()

    def obj(v):
        return 0.5 * v @ H @ v + c @ v

    best, best_val = x, obj(x)
    candidates = [_active(s, z, eq_rows), frozenset(eq_rows) | frozenset(np.flatnonzero(s <= 1e-6 * scale).tolist())]
    for act in dict.fromkeys(candidates):
        if not act:
            continue
        A, b = G[sorted(act)], h[sorted(act)]
        xp = x + np.linalg.lstsq(A, b - A @ x, rcond=None)[0]
        Z = sla.null_space(A, rcond=1e-10)
        if Z.shape[1]:
            K = Z.T @ H @ Z
            u = -np.linalg.lstsq(K, Z.T @ (H @ xp + c), rcond=1e-12)[0]
            xp = xp + Z @ u
        if np.max(G @ xp - h) > 1e-9 * scale or np.abs(A @ xp - b).max() > 1e-9 * scale:
            continue
        val = obj(xp)
        if val <= best_val + 1e-10 * (1.0 + abs(best_val)):
            best, best_val = xp, val
    return best


def _max_min(fs: FeasibleSet):
    """(phi*, f, face) where face lists base rows (lb=phi*) tight on every optimum."""
    key = ("maxmin",)
    if key in fs._cache:
        return fs._cache[key]
    n = fs.n
    G, h = fs.rows(lb=0.0, extra_cols=1)
    # m - f_t <= 0
    Gm = np.zeros((n, 2 * n + 1))
    Gm[np.arange(n), n + np.arange(n)] = -1.0
    Gm[:, -1] = 1.0
    G = np.vstack([G, Gm])
    h = np.concatenate([h, np.zeros(n)])
    c = np.zeros(2 * n + 1)
    c[-1] = -1.0
    H = np.zeros((2 * n + 1, 2 * n + 1))
    x, s, z = ipm(H, c, G, h)
    act = _active(s, z, ())
    x = _polish(G, h, act, x)
    phi = max(float(x[-1]), 0.0)
    f = x[n:2 * n]
    base_m = G.shape[0] - n
    # an active "m <= f_t" row becomes the lower-bound row f_t >= phi
    face = frozenset({r for r in act if r < base_m} | {n + (r - base_m) for r in act if r >= base_m})
    res = (phi, f, face)
    fs._cache[key] = res
    return res


def _max_total(fs: FeasibleSet, lb: float, eq_rows: frozenset):
    key = ("maxtotal", lb, eq_rows)
    if key in fs._cache:
        return fs._cache[key]
    n = fs.n
    G, h = fs.rows(lb=lb)
    c = np.zeros(2 * n)
    c[n:] = -1.0
    H = np.zeros((2 * n, 2 * n))
    x, s, z = _solve_on(G, h, eq_rows, H, c)
    act = _active(s, z, eq_rows)
    x = _polish(G, h, act, x)
    f = x[n:]
    res = (float(f.sum()), f, act)
    fs._cache[key] = res
    return res


def _clean(f, lb):
    return np.where(f < lb, lb, f)


def solve_max_total_flex(fs: FeasibleSet, lower_bound: float = 0.0) -> tuple[float, np.ndarray]:
    """Maximum total flexibility, optionally with ``f_t >= lower_bound``."""
    eq = _lower_bound_face(fs, lower_bound)
    total, f, _ = _max_total(fs, lower_bound, eq)
    return total, _clean(f, lower_bound)


def solve_max_min_flex(fs: FeasibleSet) -> tuple[float, np.ndarray]:
    """Largest ``m`` such that every task can get flexibility ``m``."""
    phi, f, _ = _max_min(fs)
    return phi, _clean(f, phi)


def _lower_bound_face(fs: FeasibleSet, lb: float) -> frozenset:
    if lb <= 0:
        return frozenset()
    phi, _, face = _max_min(fs)
    if lb > phi + 1e-9 * max(1.0, phi):
        raise InfeasibleSpec(f"lower bound {lb} exceeds max-min flexibility {phi}")
    if lb >= phi - 1e-9 * max(1.0, phi):
        return face
    return frozenset()


def equalise_objective(spec: EqualiseSpec, f) -> float:
    return float(np.sum(np.asarray(spec.weights) * (np.asarray(spec.targets) - f) ** 2))


def solve_equalise(fs: FeasibleSet, spec: EqualiseSpec) -> np.ndarray:
    """Minimise ``sum(w * (F - f)**2)`` over the (restricted) schedule set."""
    n = fs.n
    w = np.asarray(spec.weights, dtype=np.float64)
    F = np.asarray(spec.targets, dtype=np.float64)
    if len(w) != n or len(F) != n:
        raise ValueError("targets/weights length mismatch")
    lb = float(spec.lower_bound)
    eq = _lower_bound_face(fs, lb)
    if lb > 0 and eq:
        lb = _max_min(fs)[0]
    G, h = fs.rows(lb=lb)
    if spec.total_flex_equals is not None:
        total = float(spec.total_flex_equals)
        top, _, face = _max_total(fs, lb, eq)
        if total > top + 1e-6 * max(1.0, top) or total < n * lb - 1e-9:
            raise InfeasibleSpec(f"total flexibility {total} not attainable (max {top})")
        if total >= top - 1e-9 * max(1.0, top):
            eq = face
        else:
            row = np.zeros((1, 2 * n))
            row[0, n:] = 1.0
            G = np.vstack([G, row])
            h = np.append(h, total)
            eq = eq | {G.shape[0] - 1}
    H = np.zeros((2 * n, 2 * n))
    H[n:, n:] = np.diag(2.0 * w)
    c = np.zeros(2 * n)
    c[n:] = -2.0 * w * F
    x, s, z = _solve_on(G, h, eq, H, c)
    x = _qp_polish(G, h, H, c, x, s, z, eq)
    return _clean(x[n:], lb)


# ---------------------------------------------------------------------------
# optimality certificate


@dataclass
class KKTReport:
    ok: bool
    worst_decrease: float
    multiplier_residual: float
    feasible_samples: int
    messages: list[str] = field(default_factory=list)


def _placement_ok(fs: FeasibleSet, f, lb, total, tol) -> bool:
    if np.any(f < lb - tol):
        return False
    if total is not None and abs(f.sum() - total) > 1e-9 * max(1.0, abs(total)):
        return False
    try:
        canonicalize(f, fs.instance, fs.deadline, tol=tol)
    except InfeasibleFlexibilities:
        return False
    return True


def verify_kkt(
    fs: FeasibleSet,
    spec: EqualiseSpec,
    f,
    tol: float = 1e-6,
    samples: int = 1000,
    step: float = 1e-3,
    seed: int = 0,
) -> KKTReport:
    """Check optimality of ``f`` for ``solve_equalise``.

    Two independent tests: random feasible perturbations must not improve
    the objective by more than ``tol``, and the objective gradient must be a
    nonnegative combination of the tight constraint normals (fitted by NNLS).
    """
    f = np.asarray(f, dtype=np.float64)
    n = fs.n
    lb, total = spec.lower_bound, spec.total_flex_equals
    msgs = []
    if not _placement_ok(fs, f, lb, total, 1e-9):
        return KKTReport(False, np.inf, np.inf, 0, ["f is infeasible"])
    base = equalise_objective(spec, f)
    sched = canonicalize(f, fs.instance, fs.deadline)
    x = np.concatenate([sched.a, f])
    G, h = fs.rows(lb=lb)
    slack = h - G @ x
    tight = slack <= 1e-7 * (1 + np.abs(h))
    A = G[tight]
    if total is not None:
        row = np.zeros((1, 2 * n))
        row[0, n:] = 1.0
        A = np.vstack([A, row])
    tangent = sla.null_space(A) if len(A) else np.eye(2 * n)

    rng = np.random.default_rng(seed)
    worst = 0.0
    got = 0
    for i in range(samples * 20):
        if i % 2 and tangent.shape[1]:
            d = (tangent @ rng.standard_normal(tangent.shape[1]))[n:]
        else:
            d = rng.standard_normal(n)
            if total is not None:
                d -= d.mean()
        d *= step / max(np.abs(d).max(), 1e-300)
        g = f + d
        if not _placement_ok(fs, g, lb, total, 1e-12):
            continue
        got += 1
        worst = max(worst, base - equalise_objective(spec, g))
        if got >= samples:
            break
    if worst > tol:
        msgs.append(f"perturbation improves objective by {worst:.3e}")

    cols = [G[tight].T]
    if total is not None:
        e = np.zeros((2 * n, 1))
        e[n:] = 1.0
        cols += [e, -e]
    C = np.hstack(cols)
    grad = np.zeros(2 * n)
    grad[n:] = -2.0 * np.asarray(spec.weights) * (np.asarray(spec.targets) - f)
    if C.shape[1]:
        _, resid = nnls(C, -grad)
    else:
        resid = float(np.linalg.norm(grad))
    resid /= max(1.0, float(np.linalg.norm(grad)))
    if resid > tol:
        msgs.append(f"no nonnegative multipliers: residual {resid:.3e}")
    return KKTReport(not msgs, worst, resid, got, msgs)
