"""System layout: cavity lists, the radius-to-mode map, and tight-binding matrices.

A layout is a declarative description of a coupled-cavity structure: where the
defect cavities sit on the lattice, what their hole radii are, and how pairs of
cavities couple.  Single-cavity mode parameters (frequency and quality factor as
a function of hole radius) and pair coupling constants are tabulated inputs,
typically obtained from electromagnetic simulations of isolated defects and then
calibrated against measured band widths and loaded decay rates.

The layout document is a JSON-compatible tree::

    {
      "lattice":      {"a_nm": 480.0, "slab_thickness_nm": 384.0},
      "radius_table": [{"r_nm": 66.0, "omega": 0.30610, "Q": 15800.0}, ...],
      "cavities":     [{"id": 1, "x": -3.0, "y": 0.0, "r_nm": 74.0, "role": "rs_left"}, ...],
      "coupling":     {"pair_classes": [{"role_a": "pump_crow", "role_b": "pump_crow",
                                         "axis": "x", "A01": 2.4e-3, "B01": 0.0}, ...],
                       "cutoff": 3.5},
      "pump":         {"energy_fJ": 670.0, "kappa_d": 0.3141..., "k0_d": -1.5707..., "q0": 42},
      "nonlinear":    {"chi_eff_re": 1.84e5, "chi_eff_im": 0.07e5}
    }

Positions are in units of the lattice constant ``a``; frequencies in units of
``2*pi*c/a``.  Coupling classes attach to axis-aligned cavity pairs whose
separation lies within ``cutoff`` (also in units of ``a``); all other pairs
couple with exactly zero.
"""

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from .errors import LayoutError, RangeError, ValidationError

ROLES = (
    "pump_crow",
    "signal_crow",
    "idler_crow",
    "rs_left",
    "rs_center",
    "rs_right",
    "coupling_signal",
    "coupling_idler",
)

RS_ROLES = ("rs_left", "rs_center", "rs_right")


@dataclass(frozen=True)
class ComplexFrequency:
    """A resonance ``omega - i*gamma`` in 2*pi*c/a units.

    ``gamma`` is the field (half) decay rate; the power decay rate is
    ``2*gamma`` and the quality factor ``Q = omega / (2*gamma)``.
    """

    omega: float
    gamma: float

    def __post_init__(self):
        if self.omega <= 0:
            raise ValueError(f"omega must be positive, got {self.omega}")
        if self.gamma < 0:
            raise ValueError(f"gamma must be non-negative, got {self.gamma}")

    @property
    def as_complex(self) -> complex:
        return self.omega - 1j * self.gamma

    @property
    def q_factor(self) -> float:
        if self.gamma == 0:
            return np.inf
        return self.omega / (2.0 * self.gamma)


@dataclass(frozen=True)
class CavitySpec:
    """One defect cavity: integer id, lattice position, hole radius, role."""

    id: int
    x: float
    y: float
    r_nm: float
    role: str

    def __post_init__(self):
        if self.role not in ROLES:
            raise ValidationError(f"cavities: unknown role {self.role!r} (id {self.id})")


class RadiusModeTable:
    """Piecewise-linear map from defect hole radius to single-cavity mode data.

    Samples must have strictly increasing radii and monotonic frequencies.
    """

    def __init__(self, samples: Sequence[tuple]):
        if len(samples) < 2:
            raise ValidationError("radius_table: need at least 2 samples")
        radii = np.array([s[0] for s in samples], dtype=float)
        omegas = np.array([s[1] for s in samples], dtype=float)
        qs = np.array([s[2] for s in samples], dtype=float)
        if not np.all(np.diff(radii) > 0):
            raise ValidationError("radius_table: radii must be strictly increasing")
        diffs = np.diff(omegas)
        if not (np.all(diffs >= 0) or np.all(diffs <= 0)):
            raise ValidationError("radius_table: omega must be monotonic over the table")
        if np.any(omegas <= 0) or np.any(qs <= 0):
            raise ValidationError("radius_table: omega and Q must be positive")
        self.radii = radii
        self.omegas = omegas
        self.qs = qs

    @property
    def r_min(self) -> float:
        return float(self.radii[0])

    @property
    def r_max(self) -> float:
        return float(self.radii[-1])

    def __call__(self, radius: float) -> ComplexFrequency:
        return radius_to_mode(self, radius)


def radius_to_mode(table: RadiusModeTable, radius: float) -> ComplexFrequency:
    """Interpolate the single-cavity complex frequency at a given hole radius.

    Both the frequency and the quality factor are interpolated piecewise
    linearly; the decay rate follows as ``gamma = omega / (2 Q)``.  Radii
    outside the tabulated domain raise ``RangeError``.
    """
    if not (table.r_min <= radius <= table.r_max):
        raise RangeError(
            f"radius {radius} nm outside table domain [{table.r_min}, {table.r_max}] nm"
        )
    omega = float(np.interp(radius, table.radii, table.omegas))
    q = float(np.interp(radius, table.radii, table.qs))
    return ComplexFrequency(omega=omega, gamma=omega / (2.0 * q))


class CouplingModel:
    """Pair-class map for tight-binding overlap (A) and coupling (B) entries.

    A pair class is keyed by the unordered role pair and the displacement axis
    ('x' or 'y').  Classes bind to axis-aligned cavity pairs separated by less
    than ``cutoff`` (units of a); every other pair has exactly zero entries.
    ``b_diag`` sets the diagonal of B (the A diagonal is fixed to 1 by the
    single-mode normalization).
    """

    def __init__(self, pair_classes: Iterable[Mapping], cutoff: float, b_diag: float = 1.0):
        if cutoff <= 0:
            raise ValidationError("coupling.cutoff: must be positive")
        self.cutoff = float(cutoff)
        self.b_diag = float(b_diag)
        self._classes = {}
        for pc in pair_classes:
            try:
                role_a, role_b, axis = pc["role_a"], pc["role_b"], pc["axis"]
                a01 = complex(pc["A01"]) + 1j * float(pc.get("A01_im", 0.0))
                b01 = complex(pc["B01"]) + 1j * float(pc.get("B01_im", 0.0))
            except (KeyError, TypeError) as exc:
                raise ValidationError(f"coupling.pair_classes: missing key {exc}") from exc
            for role, key in ((role_a, "role_a"), (role_b, "role_b")):
                if role not in ROLES:
                    raise ValidationError(f"coupling.pair_classes.{key}: unknown role {role!r}")
            if axis not in ("x", "y"):
                raise ValidationError(f"coupling.pair_classes.axis: must be 'x' or 'y', got {axis!r}")
            if abs(a01) >= 1 or abs(b01) >= 1:
                raise ValidationError(
                    f"coupling.pair_classes: |A01| and |B01| must be < 1 for ({role_a}, {role_b})"
                )
            self._classes[(frozenset((role_a, role_b)), axis)] = (a01, b01)

    def lookup(self, role_a: str, role_b: str, axis: str):
        """Return (A01, B01) for a role pair along an axis, or (0, 0)."""
        return self._classes.get((frozenset((role_a, role_b)), axis), (0j, 0j))

    @property
    def n_classes(self) -> int:
        return len(self._classes)


@dataclass(frozen=True)
class TightBindingMatrices:
    """Assembled overlap matrix A, coupling matrix B, and diagonal of squared
    single-cavity complex frequencies, ordered by ascending cavity id."""

    A: np.ndarray
    B: np.ndarray
    omega_diag: np.ndarray          # diag entries Omega_q^2 (complex)
    ids: tuple                      # cavity ids in matrix order

    @property
    def n(self) -> int:
        return len(self.ids)

    @property
    def cond_B(self) -> float:
        return float(np.linalg.cond(self.B))

    def index_of(self, cavity_id: int) -> int:
        try:
            return self.ids.index(cavity_id)
        except ValueError:
            raise LayoutError(f"cavity id {cavity_id} not in matrix subset") from None


@dataclass(frozen=True)
class SystemLayout:
    """Immutable, validated system description."""

    a_nm: float
    slab_thickness_nm: float
    cavities: tuple
    radius_table: RadiusModeTable
    coupling: CouplingModel
    pump_defaults: dict = field(default_factory=dict)
    chi_eff: complex = 0j           # effective nonlinear rate, 1/s

    @property
    def n_total(self) -> int:
        return len(self.cavities)

    @property
    def ids(self) -> tuple:
        return tuple(c.id for c in self.cavities)

    def cavity(self, cavity_id: int) -> CavitySpec:
        for c in self.cavities:
            if c.id == cavity_id:
                return c
        raise LayoutError(f"unknown cavity id {cavity_id}")

    def ids_by_role(self, *roles: str) -> tuple:
        return tuple(c.id for c in self.cavities if c.role in roles)

    @property
    def rs_ids(self) -> tuple:
        """Ids of the three resonant-structure cavities, ascending."""
        ids = sorted(self.ids_by_role(*RS_ROLES))
        return tuple(ids)

    def role_of(self, cavity_id: int) -> str:
        return self.cavity(cavity_id).role

    def crow_ids_ordered(self, role: str) -> tuple:
        """Ids of one waveguide's cavities ordered by distance from the
        resonant structure (index 1 = closest)."""
        rs = [c for c in self.cavities if c.role in RS_ROLES]
        cx = np.mean([c.x for c in rs]) if rs else 0.0
        cy = np.mean([c.y for c in rs]) if rs else 0.0
        chain = [c for c in self.cavities if c.role == role]
        chain.sort(key=lambda c: ((c.x - cx) ** 2 + (c.y - cy) ** 2, c.id))
        return tuple(c.id for c in chain)


def _require(document: Mapping, key: str, context: str = "") -> object:
    if key not in document:
        where = f"{context}.{key}" if context else key
        raise ValidationError(f"missing required key {where!r}")
    return document[key]


def load_layout(document: Mapping) -> SystemLayout:
    """Validate a layout document and construct a ``SystemLayout``.

    Raises ``ValidationError`` naming the offending key on schema violations
    and ``LayoutError`` on structural problems (duplicate ids or positions).
    """
    lattice = _require(document, "lattice")
    a_nm = float(_require(lattice, "a_nm", "lattice"))
    slab = float(lattice.get("slab_thickness_nm", 0.0))
    if a_nm <= 0:
        raise ValidationError("lattice.a_nm: must be positive")

    table_doc = _require(document, "radius_table")
    samples = []
    for i, row in enumerate(table_doc):
        try:
            samples.append((float(row["r_nm"]), float(row["omega"]), float(row["Q"])))
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"radius_table[{i}]: missing key {exc}") from exc
    table = RadiusModeTable(samples)

    cav_doc = _require(document, "cavities")
    if not cav_doc:
        raise ValidationError("cavities: must be non-empty")
    cavities = []
    for i, row in enumerate(cav_doc):
        try:
            cavities.append(
                CavitySpec(
                    id=int(row["id"]),
                    x=float(row["x"]),
                    y=float(row["y"]),
                    r_nm=float(row["r_nm"]),
                    role=str(row["role"]),
                )
            )
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"cavities[{i}]: missing key {exc}") from exc
    ids = [c.id for c in cavities]
    if len(set(ids)) != len(ids):
        dup = sorted({i for i in ids if ids.count(i) > 1})
        raise LayoutError(f"duplicate cavity ids: {dup}")
    if sorted(ids) != list(range(1, len(ids) + 1)):
        raise LayoutError("cavity ids must be contiguous from 1..N")
    positions = [(c.x, c.y) for c in cavities]
    if len(set(positions)) != len(positions):
        raise LayoutError("cavity positions must be unique")
    for c in cavities:
        if not (table.r_min <= c.r_nm <= table.r_max):
            raise LayoutError(
                f"cavity {c.id}: radius {c.r_nm} nm outside radius_table domain"
            )

    coup_doc = _require(document, "coupling")
    coupling = CouplingModel(
        pair_classes=_require(coup_doc, "pair_classes", "coupling"),
        cutoff=float(_require(coup_doc, "cutoff", "coupling")),
        b_diag=float(coup_doc.get("b_diag", 1.0)),
    )

    nl = document.get("nonlinear", {})
    chi_eff = complex(float(nl.get("chi_eff_re", 0.0)), float(nl.get("chi_eff_im", 0.0)))

    cavities.sort(key=lambda c: c.id)
    return SystemLayout(
        a_nm=a_nm,
        slab_thickness_nm=slab,
        cavities=tuple(cavities),
        radius_table=table,
        coupling=coupling,
        pump_defaults=dict(document.get("pump", {})),
        chi_eff=chi_eff,
    )


def assemble_matrices(layout: SystemLayout, subset: Optional[Iterable[int]] = None) -> TightBindingMatrices:
    """Build the tight-binding matrices for a subset of cavities.

    Rows/columns are ordered by ascending cavity id.  Off-diagonal entries are
    taken from the coupling model for axis-aligned in-cutoff pairs; for ids
    p < q the (p, q) entry carries the class value and (q, p) its conjugate.
    """
    if subset is None:
        subset = layout.ids
    subset = sorted(set(subset))
    if not subset:
        raise LayoutError("subset must be non-empty")
    known = set(layout.ids)
    for cid in subset:
        if cid not in known:
            raise LayoutError(f"subset references unknown cavity id {cid}")

    cavs = [layout.cavity(cid) for cid in subset]
    n = len(cavs)
    A = np.eye(n, dtype=complex)
    B = np.eye(n, dtype=complex) * layout.coupling.b_diag
    omega_diag = np.zeros(n, dtype=complex)
    for i, c in enumerate(cavs):
        omega_diag[i] = radius_to_mode(layout.radius_table, c.r_nm).as_complex ** 2

    cutoff = layout.coupling.cutoff
    for i in range(n):
        for j in range(i + 1, n):
            ci, cj = cavs[i], cavs[j]
            dx, dy = cj.x - ci.x, cj.y - ci.y
            dist = np.hypot(dx, dy)
            if dist > cutoff:
                continue
            if dy == 0 and dx != 0:
                axis = "x"
            elif dx == 0 and dy != 0:
                axis = "y"
            else:
                continue  # only axis-aligned pairs carry a class
            a01, b01 = layout.coupling.lookup(ci.role, cj.role, axis)
            if a01 == 0 and b01 == 0:
                continue
            A[i, j] = a01
            A[j, i] = np.conj(a01)
            B[i, j] = b01
            B[j, i] = np.conj(b01)

    return TightBindingMatrices(A=A, B=B, omega_diag=omega_diag, ids=tuple(subset))
