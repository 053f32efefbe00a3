"""Market instances: bidders, commitments, feasible output intervals.

A bidder ``k`` offers output ``x >= 0`` at cost
``c*x + d*z + r*(x - x0)**2`` where ``z`` is its binary commitment, subject to
one internal constraint ``g*x + h*z >= b``. The market clears when
``sum(a_k * x_k) == b0``.
"""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Sequence

__all__ = [
    "BidderSpec",
    "MarketInstance",
    "FeasibleInterval",
    "ValidationReport",
    "InstanceFormatError",
    "validate_instance",
    "feasible_interval",
    "objective_value",
    "load_instance",
    "instance_from_dict",
    "instance_to_dict",
    "instance_digest",
]


class InstanceFormatError(ValueError):
    """Raised when an instance file does not conform to the schema."""


@dataclass(frozen=True)
class BidderSpec:
    id: str
    c: float
    d: float
    a: float
    g: float
    h: float
    b: float = 0.0
    r: float = 0.0
    x0: float = 0.0

    @property
    def linear(self) -> bool:
        """True when the bidder has no quadratic deviation cost."""
        return self.r == 0.0

    def params(self) -> tuple:
        """Cost and constraint data, without the id (used for symmetry classes)."""
        return (self.c, self.d, self.a, self.g, self.h, self.b, self.r, self.x0)


@dataclass(frozen=True)
class MarketInstance:
    bidders: tuple[BidderSpec, ...]
    b0: float

    def __post_init__(self):
        object.__setattr__(self, "bidders", tuple(self.bidders))

    def __len__(self) -> int:
        return len(self.bidders)

    @property
    def n(self) -> int:
        return len(self.bidders)

    @property
    def linear_mode(self) -> bool:
        """True if any bidder has ``r == 0``."""
        return any(bd.linear for bd in self.bidders)

    def with_b0(self, b0: float) -> "MarketInstance":
        return MarketInstance(self.bidders, float(b0))


@dataclass(frozen=True)
class FeasibleInterval:
    lo: float
    hi: float

    @property
    def width(self) -> float:
        return self.hi - self.lo

    def __contains__(self, x: float) -> bool:
        return self.lo <= x <= self.hi

    def clamp(self, x: float) -> float:
        return min(max(x, self.lo), self.hi)


@dataclass
class ValidationReport:
    violations: list[str] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)
    linear_bidders: list[str] = field(default_factory=list)

    @property
    def valid(self) -> bool:
        return not self.violations

    @property
    def all_linear(self) -> bool:
        return bool(self.linear_bidders) and not self.violations


def validate_instance(inst: MarketInstance) -> ValidationReport:
    """Check bidder and instance invariants.

    Never raises; problems are collected in the returned report. Bidders with
    ``r == 0`` are listed in ``linear_bidders``: the strong-duality and
    equilibrium guarantees only hold when every ``r`` is positive.
    """
    rep = ValidationReport()
    if not inst.bidders:
        rep.violations.append("instance has no bidders")
    if not math.isfinite(inst.b0):
        rep.violations.append("b0 must be finite")
    seen = set()
    for bd in inst.bidders:
        if bd.id in seen:
            rep.violations.append(f"{bd.id}: duplicate bidder id")
        seen.add(bd.id)
        for name in ("c", "d", "a", "g", "h", "b", "r", "x0"):
            if not math.isfinite(getattr(bd, name)):
                rep.violations.append(f"{bd.id}: {name} must be finite")
        if bd.a == 0:
            rep.violations.append(f"{bd.id}: a must be nonzero")
        if bd.r < 0:
            rep.violations.append(f"{bd.id}: r must be nonnegative")
        elif bd.r == 0:
            rep.linear_bidders.append(bd.id)
        if bd.c < 0:
            rep.warnings.append(f"{bd.id}: c < 0, strong duality is not guaranteed")
    if rep.linear_bidders:
        rep.warnings.append(
            f"{len(rep.linear_bidders)} bidder(s) with r = 0: linear mode, "
            "duality and equilibrium checks are advisory"
        )
    return rep


def feasible_interval(bidder: BidderSpec, z: int) -> FeasibleInterval | None:
    """Outputs ``x >= 0`` with ``g*x >= b - h*z``, or ``None`` if there are none."""
    rhs = bidder.b - bidder.h * z
    g = bidder.g
    if g > 0:
        return FeasibleInterval(max(0.0, rhs / g), math.inf)
    if g < 0:
        hi = rhs / g
        if hi < 0:
            return None
        return FeasibleInterval(0.0, hi)
    return FeasibleInterval(0.0, math.inf) if rhs <= 0 else None


def objective_value(inst: MarketInstance, z: Sequence[int], x: Sequence[float]) -> float:
    if len(z) != inst.n or len(x) != inst.n:
        raise ValueError(f"expected {inst.n} commitments and outputs, got {len(z)} and {len(x)}")
    return math.fsum(
        bd.c * xk + bd.d * zk + bd.r * (xk - bd.x0) ** 2
        for bd, zk, xk in zip(inst.bidders, z, x)
    )


# -- JSON instance files ---------------------------------------------------

_REQUIRED = ("c", "d", "a", "g", "h")
_OPTIONAL = {"b": 0.0, "r": 0.0, "x0": 0.0}


def _number(value, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise InstanceFormatError(f"{where}: expected a number, got {value!r}")
    value = float(value)
    if not math.isfinite(value):
        raise InstanceFormatError(f"{where}: NaN/Inf not allowed")
    return value


def _reject_constant(token: str):
    raise InstanceFormatError(f"non-finite number {token} not allowed")


def instance_from_dict(data: dict) -> MarketInstance:
    """Build an instance from parsed JSON, expanding ``count`` entries.

    A bidder declared with ``count > 1`` is expanded into ids ``name#1``,
    ``name#2``, ...
    """
    if not isinstance(data, dict):
        raise InstanceFormatError("top level must be an object")
    if "b0" not in data:
        raise InstanceFormatError("missing field 'b0'")
    b0 = _number(data["b0"], "b0")
    raw = data.get("bidders")
    if not isinstance(raw, list) or not raw:
        raise InstanceFormatError("'bidders' must be a non-empty list")
    bidders = []
    for i, entry in enumerate(raw):
        where = f"bidders[{i}]"
        if not isinstance(entry, dict):
            raise InstanceFormatError(f"{where}: expected an object")
        unknown = set(entry) - {"id", "count", *_REQUIRED, *_OPTIONAL}
        if unknown:
            raise InstanceFormatError(f"{where}: unknown field(s) {sorted(unknown)}")
        name = entry.get("id")
        if not isinstance(name, str) or not name:
            raise InstanceFormatError(f"{where}.id: expected a non-empty string")
        vals = {}
        for key in _REQUIRED:
            if key not in entry:
                raise InstanceFormatError(f"{where}.{key}: missing")
            vals[key] = _number(entry[key], f"{where}.{key}")
        for key, default in _OPTIONAL.items():
            vals[key] = _number(entry[key], f"{where}.{key}") if key in entry else default
        count = entry.get("count", 1)
        if isinstance(count, bool) or not isinstance(count, int) or count < 1:
            raise InstanceFormatError(f"{where}.count: expected a positive integer")
        if count == 1:
            bidders.append(BidderSpec(name, **vals))
        else:
            bidders.extend(BidderSpec(f"{name}#{j}", **vals) for j in range(1, count + 1))
    inst = MarketInstance(tuple(bidders), b0)
    report = validate_instance(inst)
    if not report.valid:
        raise InstanceFormatError("; ".join(report.violations))
    return inst


def load_instance(path) -> MarketInstance:
    with open(path, encoding="utf-8") as fh:
        try:
            data = json.load(fh, parse_constant=_reject_constant)
        except json.JSONDecodeError as exc:
            raise InstanceFormatError(f"line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    return instance_from_dict(data)


def instance_to_dict(inst: MarketInstance) -> dict:
    return {"b0": inst.b0, "bidders": [asdict(bd) for bd in inst.bidders]}


def instance_digest(inst: MarketInstance) -> str:
    blob = json.dumps(instance_to_dict(inst), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()
