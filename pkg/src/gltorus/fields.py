"""Complex fields on the torus grid: spectral derivatives, the current 1-form
ju = u x du, and the Jacobian 2-form Ju = (1/2) d(ju).

All derivatives are pseudo-spectral (FFT).  No de-aliasing filter is applied
by default; a 2/3-rule toggle is available for experiments.  Cross products
of complex numbers are taken in the R^2 sense: a x b = Re(a) Im(b) - Im(a) Re(b).
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import GLInputError
from .geometry import TorusGeometry

MAGIC = b"GLF1"


@dataclass(frozen=True)
class ComplexField:
    """Snapshot of u_eps: grid of complex values plus eps and a time stamp."""

    geom: TorusGeometry
    values: np.ndarray = field(repr=False)
    epsilon: float
    time: float = 0.0

    def __post_init__(self):
        v = np.asarray(self.values)
        if v.shape != tuple(self.geom.grid_sizes):
            raise GLInputError(f"value grid {v.shape} != grid sizes {self.geom.grid_sizes}")
        if self.epsilon <= 0:
            raise GLInputError("epsilon must be positive")
        object.__setattr__(self, "values", np.ascontiguousarray(v, dtype=np.complex128))

    def with_values(self, values, time=None) -> "ComplexField":
        return replace(self, values=values, time=self.time if time is None else time)

    @property
    def abs_log_eps(self) -> float:
        return abs(float(np.log(self.epsilon)))


@dataclass(frozen=True)
class OneForm:
    """Real 1-form: one coefficient grid per dx^i."""

    geom: TorusGeometry
    components: tuple = field(repr=False)
    time: float = 0.0

    def __post_init__(self):
        comps = tuple(np.asarray(c, dtype=float) for c in self.components)
        if len(comps) != self.geom.dim:
            raise GLInputError("one-form needs one component per axis")
        for c in comps:
            if c.shape != tuple(self.geom.grid_sizes):
                raise GLInputError("component shape mismatch")
        object.__setattr__(self, "components", comps)

    def norm_l2(self) -> float:
        dv = self.geom.cell_volume
        return float(np.sqrt(sum(np.sum(c**2) for c in self.components) * dv))


def form_pairs(dim):
    """Ordered index pairs (i < j) labelling 2-form components."""
    return [(i, j) for i in range(dim) for j in range(i + 1, dim)]


@dataclass(frozen=True)
class TwoForm:
    """Real 2-form stored on the ordered basis dx^i ^ dx^j, i < j."""

    geom: TorusGeometry
    components: tuple = field(repr=False)
    time: float = 0.0

    def __post_init__(self):
        comps = tuple(np.asarray(c, dtype=float) for c in self.components)
        if len(comps) != len(form_pairs(self.geom.dim)):
            raise GLInputError("two-form needs N(N-1)/2 components")
        for c in comps:
            if c.shape != tuple(self.geom.grid_sizes):
                raise GLInputError("component shape mismatch")
        object.__setattr__(self, "components", comps)

    @property
    def pairs(self):
        return form_pairs(self.geom.dim)

    def coefficient(self, i, j):
        """Antisymmetric lookup: coefficient of dx^i ^ dx^j for any i != j."""
        if i == j:
            return np.zeros(self.geom.grid_sizes)
        if i < j:
            return self.components[self.pairs.index((i, j))]
        return -self.components[self.pairs.index((j, i))]


# ---------------------------------------------------------------------------
# spectral machinery

def spectral_gradient_grids(geom: TorusGeometry, values: np.ndarray, dealias: bool = False):
    """Per-axis spectral derivatives of a (complex or real) grid."""
    vhat = np.fft.fftn(values)
    if dealias:
        vhat = vhat * two_thirds_mask(geom)
    ks = geom.wavenumbers()
    outs = [np.fft.ifftn(1j * k * vhat) for k in ks]
    if np.isrealobj(values):
        outs = [o.real for o in outs]
    return outs


def spectral_laplacian(geom: TorusGeometry, values: np.ndarray):
    vhat = np.fft.fftn(values)
    k2 = sum(k**2 for k in geom.wavenumbers())
    out = np.fft.ifftn(-k2 * vhat)
    return out.real if np.isrealobj(values) else out


def two_thirds_mask(geom: TorusGeometry):
    masks = []
    for n in geom.grid_sizes:
        f = np.abs(np.fft.fftfreq(n) * n)
        masks.append(f <= n // 3)
    mg = np.meshgrid(*masks, indexing="ij")
    out = np.ones(geom.grid_sizes)
    for m in mg:
        out = out * m
    return out


def spectral_gradient(fld: ComplexField, dealias: bool = False):
    """Gradient of the field values: list of complex grids d_i u."""
    return spectral_gradient_grids(fld.geom, fld.values, dealias=dealias)


def cross(a, b):
    """R^2 cross product of complex grids: a x b = Re(a) Im(b) - Im(a) Re(b)."""
    return a.real * b.imag - a.imag * b.real


def current(fld: ComplexField, grad=None) -> OneForm:
    """The supercurrent ju = u x du."""
    grad = grad if grad is not None else spectral_gradient(fld)
    comps = tuple(cross(fld.values, g) for g in grad)
    return OneForm(fld.geom, comps, time=fld.time)


def jacobian(fld: ComplexField, grad=None) -> TwoForm:
    """The Jacobian 2-form (Ju)_{ij} = d_i u x d_j u = (1/2) (d ju)_{ij}."""
    grad = grad if grad is not None else spectral_gradient(fld)
    comps = tuple(cross(grad[i], grad[j]) for i, j in form_pairs(fld.geom.dim))
    return TwoForm(fld.geom, comps, time=fld.time)


def exterior_derivative(form: OneForm) -> TwoForm:
    """d of a 1-form: (d a)_{ij} = d_i a_j - d_j a_i on the ordered basis."""
    geom = form.geom
    grads = [spectral_gradient_grids(geom, c) for c in form.components]
    comps = tuple(grads[j][i] - grads[i][j] for i, j in form_pairs(geom.dim))
    return TwoForm(geom, comps, time=form.time)


def pgl_rhs(fld: ComplexField) -> np.ndarray:
    """Right-hand side of the gradient flow: Lap u + u (1 - |u|^2) / eps^2."""
    lap = spectral_laplacian(fld.geom, fld.values)
    u = fld.values
    return lap + u * (1.0 - np.abs(u) ** 2) / fld.epsilon**2


# ---------------------------------------------------------------------------
# snapshot binary format (magic GLF1)

def save_snapshot(fld: ComplexField, path):
    """Write header (magic, dim, n_i, L_i, eps, t, precision flag) + raw re/im."""
    geom = fld.geom
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", geom.dim))
        fh.write(struct.pack(f"<{geom.dim}I", *geom.grid_sizes))
        fh.write(struct.pack(f"<{geom.dim}d", *geom.side_lengths))
        fh.write(struct.pack("<dd", fld.epsilon, fld.time))
        fh.write(struct.pack("<B", 0))  # 0 = float64 pairs
        inter = np.empty(fld.values.size * 2, dtype="<f8")
        inter[0::2] = fld.values.real.ravel(order="C")
        inter[1::2] = fld.values.imag.ravel(order="C")
        fh.write(inter.tobytes())


def load_snapshot(path, cap=None) -> ComplexField:
    with open(path, "rb") as fh:
        if fh.read(4) != MAGIC:
            raise GLInputError(f"{path}: not a GLF1 snapshot")
        (dim,) = struct.unpack("<I", fh.read(4))
        ns = struct.unpack(f"<{dim}I", fh.read(4 * dim))
        Ls = struct.unpack(f"<{dim}d", fh.read(8 * dim))
        eps, t = struct.unpack("<dd", fh.read(16))
        (prec,) = struct.unpack("<B", fh.read(1))
        if prec != 0:
            raise GLInputError(f"{path}: unsupported precision flag {prec}")
        raw = np.frombuffer(fh.read(), dtype="<f8")
    vals = (raw[0::2] + 1j * raw[1::2]).reshape(ns, order="C")
    kwargs = {} if cap is None else {"cap": cap}
    geom = TorusGeometry(Ls, ns, **kwargs)
    return ComplexField(geom, vals, epsilon=eps, time=t)
