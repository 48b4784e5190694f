"""Problem instances: vehicles, stations, companies and the government target.

Positions live in a square region; distances are Euclidean.  Battery levels
are percentages and discharge linearly with distance.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np


class ScenarioError(ValueError):
    """An instance violates one of the model invariants."""


class ScenarioParseError(ValueError):
    """A scenario file could not be read."""


class UnreachableStationError(ValueError):
    """Charging demand was requested for a station the vehicle cannot reach."""


@dataclass(frozen=True)
class Vehicle:
    id: int
    x: float
    y: float
    s_start: float
    s_des: float
    d_max: float
    beta: float = 1.0

    def __post_init__(self):
        if not 0.0 <= self.s_start <= self.s_des <= 100.0:
            raise ScenarioError(
                f"vehicle {self.id}: need 0 <= s_start <= s_des <= 100, "
                f"got s_start={self.s_start}, s_des={self.s_des}"
            )
        if not self.d_max > 0:
            raise ScenarioError(f"vehicle {self.id}: d_max must be positive, got {self.d_max}")
        if not self.beta > 0:
            raise ScenarioError(f"vehicle {self.id}: beta must be positive, got {self.beta}")


@dataclass(frozen=True)
class Station:
    id: int
    x: float
    y: float
    capacity: int

    def __post_init__(self):
        if int(self.capacity) != self.capacity or self.capacity <= 0:
            raise ScenarioError(
                f"station {self.id}: capacity must be a positive integer, got {self.capacity}"
            )


@dataclass(frozen=True)
class Company:
    id: int
    vehicles: tuple[Vehicle, ...]
    u: float = 1.0

    def __post_init__(self):
        if len(self.vehicles) == 0:
            raise ScenarioError(f"company {self.id}: vehicle list is empty")
        if self.u < 0:
            raise ScenarioError(f"company {self.id}: u must be >= 0, got {self.u}")

    @property
    def n_vehicles(self) -> int:
        return len(self.vehicles)


@dataclass(frozen=True)
class GovernmentObjective:
    """Weights A_G (diagonal, stored as a vector) and linear term b_G.

    When ``target`` is given, b_G must equal -A_G * target.
    """

    A_G: tuple[float, ...]
    b_G: tuple[float, ...]
    target: Optional[tuple[float, ...]] = None

    def __post_init__(self):
        if len(self.A_G) != len(self.b_G):
            raise ScenarioError("objective: A_G and b_G lengths differ")
        if any(not a > 0 for a in self.A_G):
            raise ScenarioError(f"objective: A_G diagonal must be strictly positive, got {self.A_G}")
        if self.target is not None:
            if len(self.target) != len(self.A_G):
                raise ScenarioError("objective: target length differs from A_G")
            for a, b, t in zip(self.A_G, self.b_G, self.target):
                if not math.isclose(b, -a * t, rel_tol=1e-12, abs_tol=1e-12):
                    raise ScenarioError("objective: b_G must equal -A_G * target")

    @classmethod
    def tracking(cls, A_G: Sequence[float], target: Sequence[float]) -> "GovernmentObjective":
        A_G = tuple(float(a) for a in A_G)
        target = tuple(float(t) for t in target)
        return cls(A_G=A_G, b_G=tuple(-a * t for a, t in zip(A_G, target)), target=target)

    @property
    def weights(self) -> np.ndarray:
        return np.asarray(self.A_G, dtype=float)

    @property
    def linear(self) -> np.ndarray:
        return np.asarray(self.b_G, dtype=float)


@dataclass(frozen=True)
class Scenario:
    companies: tuple[Company, ...]
    stations: tuple[Station, ...]
    objective: GovernmentObjective
    Q: tuple[float, ...]
    P: tuple[float, ...]
    e_pro: tuple[float, ...]
    region_side: float = 100.0

    def __post_init__(self):
        m = len(self.stations)
        if m < 1:
            raise ScenarioError("stations: need at least one station")
        if len(self.companies) < 1:
            raise ScenarioError("companies: need at least one company")
        ids = [s.id for s in self.stations]
        if ids != sorted(ids) or len(set(ids)) != m:
            raise ScenarioError("stations: ids must be unique and ascending")
        for name in ("Q", "P", "e_pro"):
            if len(getattr(self, name)) != m:
                raise ScenarioError(f"{name}: expected length {m}, got {len(getattr(self, name))}")
        if len(self.objective.A_G) != m:
            raise ScenarioError(f"objective: expected length {m}, got {len(self.objective.A_G)}")
        if any(not q > 0 for q in self.Q):
            raise ScenarioError(f"Q: diagonal must be strictly positive, got {self.Q}")
        if any(not 0.0 <= p <= 1.0 for p in self.P):
            raise ScenarioError(f"P: entries must lie in [0, 1], got {self.P}")
        vids = [v.id for c in self.companies for v in c.vehicles]
        if len(set(vids)) != len(vids):
            raise ScenarioError("vehicles: ids must be unique across companies")

    @property
    def m(self) -> int:
        return len(self.stations)

    @property
    def fleet_sizes(self) -> np.ndarray:
        return np.array([c.n_vehicles for c in self.companies], dtype=float)

    @property
    def capacities(self) -> np.ndarray:
        return np.array([s.capacity for s in self.stations], dtype=float)

    def distance_matrix(self, company: Company) -> np.ndarray:
        """Vehicle-by-station Euclidean distances for one company."""
        return np.array([[distance(v, k) for k in self.stations] for v in company.vehicles])


def distance(v: Vehicle, k: Station) -> float:
    return math.hypot(v.x - k.x, v.y - k.y)


def battery_on_arrival(v: Vehicle, d: float) -> float:
    """Battery percent left after driving ``d`` under linear discharge."""
    return v.s_start - 100.0 / v.d_max * d


def reachable(v: Vehicle, k: Station) -> bool:
    # strict: arriving with exactly 0% is not feasible
    return battery_on_arrival(v, distance(v, k)) > 0


def charging_demand(v: Vehicle, k: Station) -> float:
    """Charge units needed to reach ``s_des`` after driving to ``k``."""
    d = distance(v, k)
    left = battery_on_arrival(v, d)
    if not left > 0:
        raise UnreachableStationError(f"vehicle {v.id} cannot reach station {k.id} (d={d:.4g})")
    return v.beta * (v.s_des - left)


# ---------------------------------------------------------------------------
# random generation
# ---------------------------------------------------------------------------

CASE_STUDY_E_PRO = (202.51, 301.02, 252.34, 195.61)


@dataclass
class ScenarioConfig:
    """Counts, distribution bounds and fixed parameters for random instances.

    Defaults reproduce the three-company, four-station case study.
    """

    fleet_sizes: tuple[int, ...] = (60, 35, 45)
    capacities: tuple[int, ...] = (20, 10, 15, 10)
    target: tuple[float, ...] = (35.0, 15.0, 50.0, 40.0)
    Q: tuple[float, ...] = (1.0, 5.0, 3.0, 2.0)
    A_G: Optional[tuple[float, ...]] = None  # defaults to 2Q
    P: tuple[float, ...] = (0.15, 0.4, 0.2, 0.1)
    u: float = 1.0
    beta: float = 1.0
    region_side: float = 100.0
    s_start: tuple[float, float] = (20.0, 40.0)
    s_des: tuple[float, float] = (80.0, 100.0)
    d_max: tuple[float, float] = (150.0, 200.0)
    e_pro_bounds: tuple[float, float] = (100.0, 350.0)
    e_pro: Optional[tuple[float, ...]] = None  # fixed vector overrides sampling
    # redraw vehicles that cannot reach any station
    require_reachable: bool = True
    max_redraws: int = 1000

    def validate(self) -> None:
        if not self.fleet_sizes or any(n <= 0 for n in self.fleet_sizes):
            raise ScenarioError(f"fleet_sizes must be positive, got {self.fleet_sizes}")
        m = len(self.capacities)
        if m < 1 or any(c <= 0 for c in self.capacities):
            raise ScenarioError(f"capacities must be positive, got {self.capacities}")
        for name in ("target", "Q", "P"):
            if len(getattr(self, name)) != m:
                raise ScenarioError(f"{name}: expected length {m}")
        if self.A_G is not None and len(self.A_G) != m:
            raise ScenarioError(f"A_G: expected length {m}")
        if self.e_pro is not None and len(self.e_pro) != m:
            raise ScenarioError(f"e_pro: expected length {m}")
        if not self.region_side > 0:
            raise ScenarioError(f"region_side must be positive, got {self.region_side}")
        for name in ("s_start", "s_des", "d_max", "e_pro_bounds"):
            lo, hi = getattr(self, name)
            if lo > hi:
                raise ScenarioError(f"{name}: low bound {lo} exceeds high bound {hi}")


def generate_scenario(config: ScenarioConfig, seed: int) -> Scenario:
    """Draw a random instance; identical (config, seed) give identical scenarios."""
    config.validate()
    rng = np.random.default_rng(seed)
    side = float(config.region_side)
    m = len(config.capacities)

    xy = rng.uniform(0.0, side, size=(m, 2))
    stations = tuple(
        Station(id=j + 1, x=float(xy[j, 0]), y=float(xy[j, 1]), capacity=int(config.capacities[j]))
        for j in range(m)
    )

    def draw_vehicle(vid: int) -> Vehicle:
        x, y = rng.uniform(0.0, side, size=2)
        return Vehicle(
            id=vid,
            x=float(x),
            y=float(y),
            s_start=float(rng.uniform(*config.s_start)),
            s_des=float(rng.uniform(*config.s_des)),
            d_max=float(rng.uniform(*config.d_max)),
            beta=float(config.beta),
        )

    companies = []
    vid = 1
    for i, n in enumerate(config.fleet_sizes):
        vehicles = []
        for _ in range(n):
            v = draw_vehicle(vid)
            tries = 0
            while config.require_reachable and not any(reachable(v, k) for k in stations):
                tries += 1
                if tries > config.max_redraws:
                    raise ScenarioError(
                        f"could not place vehicle {vid} within reach of any station "
                        f"after {config.max_redraws} redraws"
                    )
                v = draw_vehicle(vid)
            vehicles.append(v)
            vid += 1
        companies.append(Company(id=i + 1, vehicles=tuple(vehicles), u=float(config.u)))

    if config.e_pro is not None:
        e_pro = tuple(float(e) for e in config.e_pro)
    else:
        e_pro = tuple(float(e) for e in rng.uniform(*config.e_pro_bounds, size=m))

    Q = tuple(float(q) for q in config.Q)
    A_G = tuple(float(a) for a in config.A_G) if config.A_G is not None else tuple(2.0 * q for q in Q)
    return Scenario(
        companies=tuple(companies),
        stations=stations,
        objective=GovernmentObjective.tracking(A_G, config.target),
        Q=Q,
        P=tuple(float(p) for p in config.P),
        e_pro=e_pro,
        region_side=side,
    )


# ---------------------------------------------------------------------------
# persistence
# ---------------------------------------------------------------------------

def scenario_to_dict(s: Scenario) -> dict:
    return {
        "region_side": s.region_side,
        "companies": [
            {
                "id": c.id,
                "u": c.u,
                "vehicles": [
                    {
                        "id": v.id,
                        "x": v.x,
                        "y": v.y,
                        "s_start": v.s_start,
                        "s_des": v.s_des,
                        "d_max": v.d_max,
                        "beta": v.beta,
                    }
                    for v in c.vehicles
                ],
            }
            for c in s.companies
        ],
        "stations": [{"id": k.id, "x": k.x, "y": k.y, "capacity": k.capacity} for k in s.stations],
        "objective": {
            "A_G": list(s.objective.A_G),
            "b_G": list(s.objective.b_G),
            "target": None if s.objective.target is None else list(s.objective.target),
        },
        "Q": list(s.Q),
        "P": list(s.P),
        "e_pro": list(s.e_pro),
    }


def _get(d: dict, key: str, where: str):
    if not isinstance(d, dict):
        raise ScenarioParseError(f"{where}: expected an object")
    if key not in d:
        raise ScenarioParseError(f"{where}: missing key {key!r}")
    return d[key]


def _num(d: dict, key: str, where: str) -> float:
    value = _get(d, key, where)
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ScenarioParseError(f"{where}.{key}: expected a number, got {value!r}")
    return float(value)


def _floats(values, where: str) -> tuple[float, ...]:
    if not isinstance(values, list):
        raise ScenarioParseError(f"{where}: expected a list of numbers")
    try:
        return tuple(float(v) for v in values)
    except (TypeError, ValueError) as exc:
        raise ScenarioParseError(f"{where}: {exc}") from None


def scenario_from_dict(d: dict) -> Scenario:
    """Rebuild a Scenario; parse problems raise ScenarioParseError, invariant
    violations raise ScenarioError."""
    companies = []
    for ci, c in enumerate(_get(d, "companies", "scenario")):
        where = f"companies[{ci}]"
        vehicles = []
        for vi, v in enumerate(_get(c, "vehicles", where)):
            vw = f"{where}.vehicles[{vi}]"
            vehicles.append(
                Vehicle(
                    id=int(_get(v, "id", vw)),
                    x=_num(v, "x", vw),
                    y=_num(v, "y", vw),
                    s_start=_num(v, "s_start", vw),
                    s_des=_num(v, "s_des", vw),
                    d_max=_num(v, "d_max", vw),
                    beta=float(v.get("beta", 1.0)),
                )
            )
        companies.append(Company(id=int(_get(c, "id", where)), vehicles=tuple(vehicles), u=float(c.get("u", 1.0))))
    stations = []
    for ki, k in enumerate(_get(d, "stations", "scenario")):
        kw = f"stations[{ki}]"
        cap = _get(k, "capacity", kw)
        if not isinstance(cap, (int, float)):
            raise ScenarioParseError(f"{kw}.capacity: expected a number")
        stations.append(Station(id=int(_get(k, "id", kw)), x=_num(k, "x", kw), y=_num(k, "y", kw), capacity=cap))
    obj = _get(d, "objective", "scenario")
    target = _get(obj, "target", "objective")
    objective = GovernmentObjective(
        A_G=_floats(_get(obj, "A_G", "objective"), "objective.A_G"),
        b_G=_floats(_get(obj, "b_G", "objective"), "objective.b_G"),
        target=None if target is None else _floats(target, "objective.target"),
    )
    return Scenario(
        companies=tuple(companies),
        stations=tuple(stations),
        objective=objective,
        Q=_floats(_get(d, "Q", "scenario"), "Q"),
        P=_floats(_get(d, "P", "scenario"), "P"),
        e_pro=_floats(_get(d, "e_pro", "scenario"), "e_pro"),
        region_side=float(_get(d, "region_side", "scenario")),
    )


def save_scenario(s: Scenario, path) -> None:
    Path(path).write_text(json.dumps(scenario_to_dict(s), indent=2) + "\n")


def load_scenario(path) -> Scenario:
    text = Path(path).read_text()
    try:
        d = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioParseError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    return scenario_from_dict(d)
