"""Univariate Meijer G-function for positive real argument.

The value is obtained from the Mellin-Barnes integral along a vertical
line ``Re(s) = c``::

    G(z) = 1/(2 pi i) \\int  prod_{j<m} Gamma(b_j + s) prod_{k<n} Gamma(1 - a_k - s)
                        / [prod_{j>=m} Gamma(1 - b_j - s) prod_{k>=n} Gamma(a_k + s)]
                        * z**(-s) ds

For real ``z`` the integrand is conjugate-symmetric about ``t = 0`` so only
the upper half line is integrated.  When no vertical line separates the two
pole families (or the caller forces an abscissa) the residues of the poles
on the wrong side are added back explicitly, which gives the value of the
loop-contour definition.

:func:`meijer_g_residue_series` sums the left-pole residues directly and
serves as an independent check of the quadrature.
"""

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import ConvergenceError, DegeneratePoleError, DomainError, ParameterError
from .specfun import log_gamma

__all__ = [
    "GSpec",
    "ContourPlan",
    "plan_contour",
    "meijer_g",
    "meijer_g_line",
    "meijer_g_residue_series",
    "perturb_degenerate",
]

POLE_TOL = 1e-9
DEGENERATE_TOL = 1e-8
PERTURBATION = 1e-6
CLUSTER_TOL = 0.02
CIRCLE_NODES = 64
REL_TOL = 1e-9
MAX_LEVEL = 5
START_HALF_HEIGHT = 40.0
START_PANEL_WIDTH = 0.8
GL_ORDER = 20
_ENVELOPE_DROP = math.log(1e-32)

_GL_X, _GL_W = np.polynomial.legendre.leggauss(GL_ORDER)


def _near_int(x, tol):
    return abs(x - round(x)) <= tol


@dataclass(frozen=True)
class GSpec:
    """Parameters of ``G^{m,n}_{p,q}(z | a; b)``.

    ``a`` has length ``p`` and ``b`` length ``q``.  Construction rejects
    specs whose Mellin-Barnes integrand does not decay along vertical lines
    (``delta <= 0``) and specs where a left pole lands on a right pole.
    """

    m: int
    n: int
    a: tuple
    b: tuple

    def __post_init__(self):
        object.__setattr__(self, "a", tuple(float(v) for v in self.a))
        object.__setattr__(self, "b", tuple(float(v) for v in self.b))
        if not (0 <= self.n <= self.p and 0 <= self.m <= self.q):
            raise ParameterError(
                f"GSpec orders out of range: m={self.m}, n={self.n}, p={self.p}, q={self.q}")
        if self.delta <= 0:
            raise ParameterError(
                f"GSpec has delta = {self.delta:g} <= 0; vertical contour does not converge")
        for ak in self.a[: self.n]:
            for bj in self.b[: self.m]:
                d = ak - bj
                if d > 0.5 and _near_int(d, POLE_TOL):
                    raise ParameterError(
                        f"pole collision: a_k - b_j = {d:g} is a positive integer")

    @property
    def p(self):
        return len(self.a)

    @property
    def q(self):
        return len(self.b)

    @property
    def delta(self):
        return self.m + self.n - 0.5 * (self.p + self.q)

    @property
    def left_starts(self):
        """Rightmost pole of each Gamma(b_j + s), j < m."""
        return tuple(-bj for bj in self.b[: self.m])

    @property
    def right_starts(self):
        """Leftmost pole of each Gamma(1 - a_k - s), k < n."""
        return tuple(1.0 - ak for ak in self.a[: self.n])

    def strip(self):
        lo = max(self.left_starts, default=-math.inf)
        hi = min(self.right_starts, default=math.inf)
        return lo, hi


@dataclass(frozen=True)
class ContourPlan:
    real_abscissa: float
    half_height: float
    node_count: int


def _log_integrand(spec, s):
    """log of the Gamma-ratio part of the integrand (without z**-s)."""
    s = np.asarray(s, dtype=complex)
    out = np.zeros(s.shape, dtype=complex)
    for j, bj in enumerate(spec.b):
        if j < spec.m:
            out += log_gamma(bj + s)
        else:
            out -= log_gamma(1.0 - bj - s)
    for k, ak in enumerate(spec.a):
        if k < spec.n:
            out += log_gamma(1.0 - ak - s)
        else:
            out -= log_gamma(ak + s)
    return out


def _real_log_modulus(spec, c):
    """Re log|integrand| on the real axis at ``c``; +inf at any pole."""
    try:
        val = _log_integrand(spec, complex(c, 0.0))
    except DomainError:
        return math.inf
    return float(np.real(val))


def _pole_positions(spec, lo, hi):
    """All pole real parts inside [lo, hi]."""
    out = []
    for s0 in spec.left_starts:
        k = 0
        while s0 - k >= lo:
            if s0 - k <= hi:
                out.append(s0 - k)
            k += 1
    for s0 in spec.right_starts:
        k = 0
        while s0 + k <= hi:
            if s0 + k >= lo:
                out.append(s0 + k)
            k += 1
    return sorted(out)


def _misplaced(spec, c):
    """Poles lying on the wrong side of the line Re(s) = c.

    Returns a list of ``(kind, index, k, s0)`` with kind 'L' for poles of
    Gamma(b_j + s) right of c and 'R' for poles of Gamma(1 - a_k - s) left
    of c.
    """
    out = []
    for j, s0 in enumerate(spec.left_starts):
        k = 0
        while s0 - k > c:
            out.append(("L", j, k, s0 - k))
            k += 1
    for i, s0 in enumerate(spec.right_starts):
        k = 0
        while s0 + k < c:
            out.append(("R", i, k, s0 + k))
            k += 1
    return out


def _distance_to_poles(spec, c):
    near = _pole_positions(spec, c - 2.0, c + 2.0)
    return min((abs(c - x) for x in near), default=2.0)


@lru_cache(maxsize=512)
def _candidates(spec):
    """Quantised abscissa candidates, so node tables can be cached."""
    lo, hi = spec.strip()
    if lo < hi:
        if math.isfinite(lo) and math.isfinite(hi):
            w = hi - lo
            cands = [lo + w * f for f in np.linspace(0.1, 0.9, 33)]
        else:
            steps = [0.25, 0.5, 0.75, 1.0, 1.5, 2.0, 3.0, 4.0, 6.0, 8.0, 12.0,
                     16.0, 24.0, 32.0, 48.0, 64.0, 96.0, 128.0]
            if math.isfinite(lo):
                cands = [lo + d for d in steps]
            elif math.isfinite(hi):
                cands = [hi - d for d in steps]
            else:
                cands = [float(d) for d in range(-64, 65, 2)]
        return tuple(c for c in cands if _distance_to_poles(spec, c) >= 0.05)
    # No separating line: midpoints of the gaps between poles in the
    # overlap region, each carrying a finite set of residue corrections.
    poles = _pole_positions(spec, hi - 1.0, lo + 1.0)
    cands = []
    for x0, x1 in zip(poles, poles[1:]):
        if x1 - x0 >= 0.1:
            cands.append(0.5 * (x0 + x1))
    cands += [hi - 0.5, lo + 0.5]
    return tuple(c for c in cands if _distance_to_poles(spec, c) >= 0.05)


@lru_cache(maxsize=512)
def _candidate_scores(spec):
    cands = _candidates(spec)
    if not cands:
        raise ParameterError("no admissible contour abscissa found")
    n_bad = np.array([len(_misplaced(spec, c)) for c in cands])
    phi0 = np.array([_real_log_modulus(spec, c) for c in cands])
    return np.array(cands), n_bad, phi0


def _choose_abscissa(spec, log_z):
    cands, n_bad, phi0 = _candidate_scores(spec)
    ok = n_bad == n_bad.min()
    # real-axis log-modulus of the full integrand; its minimum is the
    # saddle-point region, where cancellation along the line is smallest
    phi = phi0[None, :] - np.outer(log_z, cands)
    phi[:, ~ok] = np.inf
    return np.argmin(phi, axis=1)


@lru_cache(maxsize=4096)
def _node_table(spec, c, level):
    """Nodes, weights and log-integrand on the upper half of Re(s) = c."""
    d = _distance_to_poles(spec, c)
    panel = min(START_PANEL_WIDTH, 2.0 * d) / (2 ** level)
    # half height: at least START_HALF_HEIGHT, extended until the decay
    # envelope has fallen far below its maximum
    half = START_HALF_HEIGHT
    ref = np.max(np.real(_log_integrand(spec, c + 1j * np.linspace(0.0, half, 81))))
    while True:
        tail = np.real(_log_integrand(spec, c + 1j * np.linspace(half, 2 * half, 41)))
        ref = max(ref, tail.max())
        if tail.max() < ref + _ENVELOPE_DROP:
            break
        half *= 2.0
        if half > 10240.0:
            raise ConvergenceError("integrand envelope does not decay", ())
    n_panels = int(math.ceil(half / panel))
    edges = np.arange(n_panels + 1) * panel
    mid = 0.5 * (edges[:-1] + edges[1:])
    t = (mid[:, None] + 0.5 * panel * _GL_X[None, :]).ravel()
    w = np.tile(0.5 * panel * _GL_W, n_panels)
    logf = _log_integrand(spec, c + 1j * t)
    keep = np.real(logf) >= np.max(np.real(logf)) + _ENVELOPE_DROP
    t, w, logf = t[keep], w[keep], logf[keep]
    scale = float(np.max(np.real(logf)))
    amp = w * np.exp(np.real(logf) - scale)
    plan = ContourPlan(real_abscissa=float(c), half_height=half,
                       node_count=2 * int(math.ceil(half / panel)) * GL_ORDER)
    return t, amp, np.imag(logf), scale, plan


def _line_integral(spec, c, level, log_z):
    """(1/2 pi i) * integral along Re(s)=c, vectorised over log_z.

    Returns (value, l1) where l1 is the integral of |integrand|, a
    roundoff scale for the value.
    """
    t, amp, phase, scale, _ = _node_table(spec, c, level)
    out = np.empty(log_z.shape)
    l1 = np.empty(log_z.shape)
    chunk = max(1, 2_000_000 // max(len(t), 1))
    for i in range(0, len(log_z), chunk):
        lz = log_z[i:i + chunk]
        arg = phase[None, :] - np.outer(lz, t)
        acc = np.cos(arg) @ amp
        mag = scale - c * lz
        out[i:i + chunk] = np.exp(mag) * acc / math.pi
        l1[i:i + chunk] = np.exp(mag) * amp.sum() / math.pi
    return out, l1


def _residue_term(spec, kind, idx, k, s0, log_z):
    """Residue of the integrand at a simple pole, vectorised over log_z."""
    logr = 0.0 + 0.0j
    for j, bj in enumerate(spec.b):
        arg = bj + s0 if j < spec.m else 1.0 - bj - s0
        is_pole = arg <= 0.5 and _near_int(arg, POLE_TOL)
        if kind == "L" and j == idx:
            continue
        if is_pole:
            if j < spec.m:
                raise DegeneratePoleError(f"coincident poles at s = {s0:g}")
            return np.zeros_like(log_z)
        lg = complex(log_gamma(complex(arg)))
        logr += lg if j < spec.m else -lg
    for i, ak in enumerate(spec.a):
        arg = 1.0 - ak - s0 if i < spec.n else ak + s0
        is_pole = arg <= 0.5 and _near_int(arg, POLE_TOL)
        if kind == "R" and i == idx:
            continue
        if is_pole:
            if i < spec.n:
                raise DegeneratePoleError(f"coincident poles at s = {s0:g}")
            return np.zeros_like(log_z)
        lg = complex(log_gamma(complex(arg)))
        logr += lg if i < spec.n else -lg
    sign = -1.0 if k % 2 else 1.0
    if kind == "R":
        sign = -sign
    return sign * np.real(np.exp(logr - math.lgamma(k + 1) - s0 * log_z))


def _clusters(spec, c):
    """Misplaced poles grouped by location (coincident poles together)."""
    poles = sorted(_misplaced(spec, c), key=lambda t: t[3])
    groups = []
    for p in poles:
        if groups and p[3] - groups[-1][-1][3] <= CLUSTER_TOL:
            groups[-1].append(p)
        else:
            groups.append([p])
    return groups


def _circle_residue(spec, members, c, log_z):
    """Residue sum of the integrand inside a small circle around a pole cluster.

    The trapezoidal rule on a circle converges geometrically, so this
    handles poles of any order without derivatives of Gamma.
    """
    pos = [m[3] for m in members]
    centre = 0.5 * (min(pos) + max(pos))
    spread = 0.5 * (max(pos) - min(pos))
    others = [x for x in _pole_positions(spec, centre - 2.0, centre + 2.0)
              if abs(x - centre) > spread + 1e-12]
    gap = min([abs(x - centre) for x in others] + [2.0, abs(c - centre)])
    r = min(0.25, 0.5 * gap)
    if r <= 4.0 * spread:
        raise DegeneratePoleError(f"pole cluster at s = {centre:g} is not isolated")
    theta = 2.0 * np.pi * (np.arange(CIRCLE_NODES) + 0.5) / CIRCLE_NODES
    step = r * np.exp(1j * theta)
    nodes = centre + step
    logf = _log_integrand(spec, nodes)
    vals = np.exp(logf[None, :] - np.outer(log_z, nodes)) * step[None, :]
    return np.real(vals.mean(axis=1))


def _corrections(spec, c, log_z):
    out = np.zeros_like(log_z)
    for group in _clusters(spec, c):
        kind = group[0][0]
        if len(group) == 1:
            _, idx, k, s0 = group[0]
            # the 'R' residue already carries its minus sign
            term = _residue_term(spec, kind, idx, k, s0, log_z)
        else:
            term = _circle_residue(spec, group, c, log_z)
        # left poles right of the line are added, right poles left of it
        # are removed
        out += term if kind == "L" else -term
    return out


def perturb_degenerate(spec, tol=DEGENERATE_TOL, eps=PERTURBATION):
    """Shift coefficients so no two poles of one numerator family coincide.

    Each offending ``b_j`` (j < m) or ``a_k`` (k < n) is moved by ``+eps``
    (``-eps`` for ``a``) until all in-family differences are non-integer.
    """
    b = list(spec.b)
    a = list(spec.a)
    for j in range(spec.m):
        for i in range(j):
            if _near_int(b[j] - b[i], tol):
                b[j] += eps * (1 + i)
    for k in range(spec.n):
        for i in range(k):
            if _near_int(a[k] - a[i], tol):
                a[k] -= eps * (1 + i)
    return GSpec(spec.m, spec.n, tuple(a), tuple(b))


def _evaluate(spec, log_z, abscissa, corrections):
    if abscissa is None:
        idx = _choose_abscissa(spec, log_z)
        cands = _candidate_scores(spec)[0]
        groups = {float(cands[i]): np.flatnonzero(idx == i) for i in np.unique(idx)}
    else:
        if _distance_to_poles(spec, abscissa) < 1e-3:
            raise ParameterError(f"abscissa {abscissa:g} lies on a pole")
        groups = {float(abscissa): np.arange(len(log_z))}

    out = np.empty(log_z.shape)
    for c, sel in groups.items():
        lz = log_z[sel]
        prev = None
        for level in range(MAX_LEVEL + 1):
            val, l1 = _line_integral(spec, c, level, lz)
            if prev is not None:
                err = np.abs(val - prev)
                if np.all(err <= REL_TOL * np.abs(val) + 64 * np.finfo(float).eps * l1):
                    break
            prev = val
        else:
            raise ConvergenceError(
                f"Mellin-Barnes quadrature did not converge (c = {c:g})",
                (prev, val))
        if corrections:
            try:
                val = val + _corrections(spec, c, lz)
            except DegeneratePoleError:
                # coincident residues: evaluate a slightly perturbed spec
                pspec = perturb_degenerate(spec)
                val = _evaluate(pspec, lz, c, True)
        out[sel] = val
    return out


def _prep_z(z):
    za = np.asarray(z, dtype=float)
    if np.any(~np.isfinite(za)) or np.any(za <= 0):
        raise DomainError("Meijer G argument must be positive and finite")
    return za, np.log(za.ravel())


def meijer_g(spec, z, abscissa=None):
    """Evaluate ``G^{m,n}_{p,q}(z | a; b)`` for ``z > 0``.

    Parameters
    ----------
    spec : GSpec
    z : float or array_like
        Positive real argument(s).
    abscissa : float, optional
        Force the real part of the integration line.  Poles left on the
        wrong side are compensated by their residues.  By default the
        line is placed in the separating strip where the real-axis
        integrand modulus is smallest.

    Returns
    -------
    float or ndarray
    """
    za, lz = _prep_z(z)
    out = _evaluate(spec, lz, abscissa, True)
    return out.reshape(za.shape)[()] if za.ndim == 0 else out.reshape(za.shape)


def meijer_g_line(spec, z, abscissa):
    """Raw ``(1/2 pi i)`` line integral along ``Re(s) = abscissa``.

    No residue corrections are applied.  Moving the line across a pole
    changes the result by that pole's residue, which is how complementary
    quantities (e.g. survival functions) are obtained without cancellation.
    """
    za, lz = _prep_z(z)
    out = _evaluate(spec, lz, float(abscissa), False)
    return out.reshape(za.shape)[()] if za.ndim == 0 else out.reshape(za.shape)


def plan_contour(spec, z):
    """Contour plan used by :func:`meijer_g` for a scalar ``z``."""
    _, lz = _prep_z(z)
    idx = _choose_abscissa(spec, lz[:1])[0]
    c = float(_candidate_scores(spec)[0][idx])
    return _node_table(spec, c, 0)[4]


def meijer_g_residue_series(spec, z, terms):
    """Partial sum of the left-pole residue expansion of ``G``.

    Sums residues at ``s = -b_j - k`` for ``j < m`` and ``k < terms``.
    Converges for all z when ``p < q`` and for ``z < 1`` when ``p == q``.

    Raises
    ------
    DegeneratePoleError
        If two ``b_j`` (j < m) differ by an integer.
    DomainError
        If ``z`` is outside the region where the series converges.
    """
    z = float(z)
    if not z > 0:
        raise DomainError("residue series needs z > 0")
    if spec.p > spec.q or (spec.p == spec.q and z >= 1.0):
        raise DomainError(
            f"left-pole series does not converge for p={spec.p}, q={spec.q}, z={z:g}")
    bm = spec.b[: spec.m]
    for i in range(len(bm)):
        for j in range(i):
            if _near_int(bm[i] - bm[j], DEGENERATE_TOL):
                raise DegeneratePoleError(
                    f"b_{i} - b_{j} = {bm[i] - bm[j]:g} is an integer; perturb the spec")
    if terms <= 0:
        return 0.0
    lz = np.array([math.log(z)])
    parts = []
    for j, bj in enumerate(bm):
        for k in range(terms):
            parts.append(float(_residue_term(spec, "L", j, k, -bj - k, lz)[0]))
    return math.fsum(parts)
