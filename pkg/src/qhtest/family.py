"""One-parameter qubit state family, hypothesis sets, and grid MLEs.

The family is

    rho(omega) = 1/2 [[1 + r_z cos(omega),  r_x sin(omega)],
                      [r_x sin(omega),      1 - r_z cos(omega)]]

with omega in degrees on [0, 360) and fixed radii (r_z, r_x). Hypothesis
sets are finite unions of intervals and isolated points of omega. Composite
likelihoods are maximized on a uniform grid (default step 0.5 degrees);
open endpoints are excluded by one step, closed endpoints are included
exactly, and argmax ties break toward the smallest angle.

Likelihood bookkeeping exploits that Tr(rho(omega)^(x)n M) is a
trigonometric polynomial of degree n in omega: each observed outcome is
reduced to its 2n+1 Fourier coefficients by exact interpolation through
equispaced node angles, after which evaluation on a grid is a single
matrix-vector product and evaluation at an arbitrary angle (needed by the
golden-section refinement of the null MLE) costs a dot product per round.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    EmptyGrid,
    InconsistentTranscript,
    InvalidBlochVector,
    InvariantViolation,
    ParseError,
)
from .quantum import DensityMatrix, Povm

P_FLOOR = 1e-300
DEFAULT_RESOLUTION = 0.5
_ANGLE_EPS = 1e-9


@dataclass(frozen=True)
class FamilyConfig:
    """Radii of the planar Bloch curve traced by the family."""

    r_z: float = 1.0
    r_x: float = 1.0

    def __post_init__(self):
        omegas = np.radians(np.arange(0.0, 360.0, 0.5))
        r2 = (self.r_z * np.cos(omegas)) ** 2 + (self.r_x * np.sin(omegas)) ** 2
        worst = float(r2.max())
        if worst > 1.0 + 1e-12:
            raise InvalidBlochVector(
                f"Bloch norm^2 reaches {worst:.6g} > 1 for (r_z, r_x) = "
                f"({self.r_z}, {self.r_x})"
            )


def state_from_angle(cfg: FamilyConfig, omega: float) -> DensityMatrix:
    """Family state at the given angle (degrees)."""
    w = math.radians(omega)
    bz = cfg.r_z * math.cos(w)
    bx = cfg.r_x * math.sin(w)
    n2 = bz * bz + bx * bx
    if n2 > 1.0 + 1e-12:
        raise InvalidBlochVector(f"Bloch norm^2 {n2:.6g} > 1 at omega = {omega}")
    mat = 0.5 * np.array([[1.0 + bz, bx], [bx, 1.0 - bz]], dtype=complex)
    return DensityMatrix(mat=mat)


@dataclass(frozen=True)
class Piece:
    """One interval [start, end] with endpoint openness; a point has start == end."""

    start: float
    end: float
    closed_start: bool = True
    closed_end: bool = True

    def __post_init__(self):
        if not (0.0 <= self.start <= self.end <= 360.0):
            raise ValueError(f"piece ({self.start}, {self.end}) outside [0, 360]")
        if self.start == self.end and not (self.closed_start and self.closed_end):
            raise ValueError("a degenerate piece must be closed on both sides")

    @property
    def is_point(self) -> bool:
        return self.start == self.end

    @property
    def length(self) -> float:
        return self.end - self.start

    def contains(self, omega: float) -> bool:
        if omega < self.start or omega > self.end:
            return False
        if omega == self.start and not self.closed_start:
            return False
        if omega == self.end and not self.closed_end:
            return False
        return True

    def __str__(self) -> str:
        if self.is_point:
            return f"{{{_fmt_angle(self.start)}}}"
        lo = "[" if self.closed_start else "("
        hi = "]" if self.closed_end else ")"
        return f"{lo}{_fmt_angle(self.start)},{_fmt_angle(self.end)}{hi}"


def _fmt_angle(a: float) -> str:
    return f"{a:g}"


def _pieces_overlap(a: Piece, b: Piece) -> bool:
    if a.end < b.start or b.end < a.start:
        return False
    if a.end == b.start:
        return a.closed_end and b.closed_start
    if b.end == a.start:
        return b.closed_end and a.closed_start
    return True


@dataclass(frozen=True)
class HypothesisSet:
    """A finite union of pairwise disjoint pieces of the angle axis."""

    pieces: tuple

    def __post_init__(self):
        if not self.pieces:
            raise ValueError("a hypothesis set needs at least one piece")
        ordered = tuple(sorted(self.pieces, key=lambda p: (p.start, p.end)))
        for left, right in zip(ordered, ordered[1:]):
            if _pieces_overlap(left, right):
                raise ValueError(f"pieces {left} and {right} overlap")
        object.__setattr__(self, "pieces", ordered)

    def contains(self, omega: float) -> bool:
        return any(p.contains(omega) for p in self.pieces)

    def midpoint_of_largest_piece(self) -> float:
        best = sorted(self.pieces, key=lambda p: (-p.length, p.start))[0]
        return (best.start + best.end) / 2.0

    def __str__(self) -> str:
        return " ".join(str(p) for p in self.pieces)


def sets_disjoint(a: HypothesisSet, b: HypothesisSet) -> bool:
    return not any(_pieces_overlap(pa, pb) for pa in a.pieces for pb in b.pieces)


def parse_hypothesis_set(text: str) -> HypothesisSet:
    """Parse a set from pieces like "(45,180]", "[0,45)", or "{45,135}".

    Pieces are separated by whitespace; a brace group lists isolated points.
    """
    pieces: list[Piece] = []
    rest = text.strip()
    if not rest:
        raise ParseError("empty hypothesis set")
    token_re = re.compile(r"([\[\(][^\]\)]*[\]\)]|\{[^}]*\})")
    pos = 0
    while pos < len(rest):
        if rest[pos].isspace():
            pos += 1
            continue
        m = token_re.match(rest, pos)
        if m is None:
            raise ParseError(f"cannot parse hypothesis set near {rest[pos:]!r}")
        tok = m.group(0)
        pos = m.end()
        try:
            if tok.startswith("{"):
                for part in tok[1:-1].split(","):
                    a = float(part)
                    pieces.append(Piece(a, a))
            else:
                body = tok[1:-1].split(",")
                if len(body) != 2:
                    raise ValueError(f"interval {tok!r} needs two endpoints")
                lo, hi = float(body[0]), float(body[1])
                pieces.append(
                    Piece(lo, hi, closed_start=tok[0] == "[", closed_end=tok[-1] == "]")
                )
        except ValueError as exc:
            raise ParseError(f"bad hypothesis piece {tok!r}: {exc}") from exc
    return HypothesisSet(pieces=tuple(pieces))


# --- trigonometric interpolation of outcome likelihoods ------------------

_node_cache: dict = {}
_dft_cache: dict = {}


def _node_powers(cfg: FamilyConfig, copies: int) -> np.ndarray:
    """Stack of rho(node)^(x)copies at 2*copies+1 equispaced node angles."""
    key = (cfg.r_z, cfg.r_x, copies)
    hit = _node_cache.get(key)
    if hit is not None:
        return hit
    n_nodes = 2 * copies + 1
    mats = []
    for j in range(n_nodes):
        rho = state_from_angle(cfg, 360.0 * j / n_nodes)
        out = rho.mat
        for _ in range(copies - 1):
            out = np.kron(out, rho.mat)
        mats.append(out)
    stacked = np.stack(mats)
    stacked.setflags(write=False)
    _node_cache[key] = stacked
    return stacked


def _dft_matrix(copies: int) -> np.ndarray:
    """Map of node values to Fourier coefficients [c0, c1..cn, s1..sn]."""
    hit = _dft_cache.get(copies)
    if hit is not None:
        return hit
    n_nodes = 2 * copies + 1
    theta = 2.0 * np.pi * np.arange(n_nodes) / n_nodes
    rows = [np.full(n_nodes, 1.0 / n_nodes)]
    for k in range(1, copies + 1):
        rows.append(2.0 / n_nodes * np.cos(k * theta))
    for k in range(1, copies + 1):
        rows.append(2.0 / n_nodes * np.sin(k * theta))
    mat = np.array(rows)
    mat.setflags(write=False)
    _dft_cache[copies] = mat
    return mat


def _fourier_basis(angles_deg: np.ndarray, copies: int) -> np.ndarray:
    """Rows [1, cos(k w), .., sin(k w), ..] evaluated at each angle."""
    w = np.radians(np.atleast_1d(angles_deg))
    cols = [np.ones_like(w)]
    for k in range(1, copies + 1):
        cols.append(np.cos(k * w))
    for k in range(1, copies + 1):
        cols.append(np.sin(k * w))
    return np.column_stack(cols)


def outcome_coeffs(cfg: FamilyConfig, element: np.ndarray, copies: int) -> np.ndarray:
    """Fourier coefficients of omega -> Tr(rho(omega)^(x)copies element)."""
    traces = np.einsum("nab,ba->n", _node_powers(cfg, copies), element).real
    return _dft_matrix(copies) @ traces


def log_outcome_prob(cfg: FamilyConfig, omega: float, element: np.ndarray, copies: int) -> float:
    """log max(Tr(rho(omega)^(x)copies element), floor), by direct trace."""
    rho = state_from_angle(cfg, omega)
    out = rho.mat
    for _ in range(copies - 1):
        out = np.kron(out, rho.mat)
    p = float(np.einsum("ab,ba->", out, element).real)
    return math.log(max(p, P_FLOOR))


# --- parameter grids ------------------------------------------------------


@dataclass(frozen=True)
class ParamGrid:
    """Grid angles with running log-likelihood sums over observed rounds."""

    angles: np.ndarray
    per_angle_loglik: np.ndarray
    segments: np.ndarray
    rounds: tuple = ()
    basis_cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        self.angles.setflags(write=False)
        self.per_angle_loglik.setflags(write=False)
        self.segments.setflags(write=False)

    def basis(self, copies: int) -> np.ndarray:
        b = self.basis_cache.get(copies)
        if b is None:
            b = _fourier_basis(self.angles, copies)
            b.setflags(write=False)
            self.basis_cache[copies] = b
        return b


def build_grid(hset: HypothesisSet, resolution: float = DEFAULT_RESOLUTION) -> ParamGrid:
    """Uniform grid over a hypothesis set.

    Every interval is covered at the given spacing starting from its first
    included lattice point; closed endpoints are appended exactly when the
    lattice misses them, open endpoints are pushed inward by one step.
    """
    if resolution <= 0:
        raise ValueError(f"resolution must be positive, got {resolution}")
    angles: list[float] = []
    segs: list[int] = []
    for idx, piece in enumerate(hset.pieces):
        if piece.is_point:
            angles.append(piece.start)
            segs.append(idx)
            continue
        lo = piece.start if piece.closed_start else piece.start + resolution
        hi = piece.end if piece.closed_end else piece.end - resolution
        if lo > hi + _ANGLE_EPS:
            continue
        count = int(math.floor((hi - lo) / resolution + _ANGLE_EPS))
        pts = lo + resolution * np.arange(count + 1)
        angles.extend(pts.tolist())
        segs.extend([idx] * (count + 1))
        if piece.closed_end and hi - pts[-1] > _ANGLE_EPS:
            angles.append(piece.end)
            segs.append(idx)
    if not angles:
        raise EmptyGrid(
            f"set {hset} yields no grid points at resolution {resolution}"
        )
    arr = np.array(angles)
    if np.any(np.diff(arr) <= 0):
        raise InvariantViolation("grid angles not strictly increasing")
    return ParamGrid(
        angles=arr,
        per_angle_loglik=np.zeros(arr.shape[0]),
        segments=np.array(segs, dtype=int),
    )


def accumulate(
    grid: ParamGrid,
    cfg: FamilyConfig,
    povm: Povm,
    copies: int,
    outcome,
) -> ParamGrid:
    """Return a new grid with one observed round folded into the sums."""
    if povm.dim != 2**copies:
        raise InconsistentTranscript(
            f"POVM dim {povm.dim} does not match 2^{copies} for {copies} copies"
        )
    try:
        element = povm.element(outcome)
    except KeyError:
        raise InconsistentTranscript(f"outcome {outcome!r} not among POVM labels") from None
    coeffs = outcome_coeffs(cfg, element, copies)
    probs = grid.basis(copies) @ coeffs
    new_loglik = grid.per_angle_loglik + np.log(np.maximum(probs, P_FLOOR))
    return ParamGrid(
        angles=grid.angles,
        per_angle_loglik=new_loglik,
        segments=grid.segments,
        rounds=grid.rounds + ((copies, coeffs),),
        basis_cache=grid.basis_cache,
    )


def loglik_at(grid: ParamGrid, omega: float) -> float:
    """Continuous log-likelihood of the accumulated rounds at one angle."""
    total = 0.0
    w = math.radians(omega)
    for copies, coeffs in grid.rounds:
        val = coeffs[0]
        for k in range(1, copies + 1):
            val += coeffs[k] * math.cos(k * w) + coeffs[copies + k] * math.sin(k * w)
        total += math.log(max(val, P_FLOOR))
    return total


@dataclass(frozen=True)
class MleResult:
    omega: float
    loglik: float
    state: DensityMatrix


_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def _golden_max(f, lo: float, hi: float, iters: int = 48) -> tuple[float, float]:
    """Deterministic golden-section maximization on [lo, hi]."""
    a, b = lo, hi
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    best_x, best_f = (c, fc) if fc >= fd else (d, fd)
    for _ in range(iters):
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = f(c)
            cand_x, cand_f = c, fc
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = f(d)
            cand_x, cand_f = d, fd
        if cand_f > best_f:
            best_x, best_f = cand_x, cand_f
    return best_x, best_f


def mle(grid: ParamGrid, cfg: FamilyConfig, refine: bool = False) -> MleResult:
    """Maximum-likelihood angle on the grid, optionally refined.

    The raw estimate is the grid argmax with ties toward the smallest
    angle. With refine set and the argmax interior to an interval (both
    neighbors in the same piece), a golden-section pass over the two
    adjacent grid cells replaces the grid value whenever it improves the
    continuous log-likelihood.
    """
    j = int(np.argmax(grid.per_angle_loglik))
    omega = float(grid.angles[j])
    best = float(grid.per_angle_loglik[j])
    if refine and 0 < j < grid.angles.shape[0] - 1:
        seg = grid.segments
        if seg[j - 1] == seg[j] == seg[j + 1] and grid.rounds:
            x, fx = _golden_max(
                lambda w: loglik_at(grid, w),
                float(grid.angles[j - 1]),
                float(grid.angles[j + 1]),
            )
            if fx > best:
                omega, best = x, fx
    return MleResult(omega=omega, loglik=best, state=state_from_angle(cfg, omega))
