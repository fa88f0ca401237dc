"""Multi-issue negotiation domains, bids, and linear additive preference profiles.

Everything in this module is immutable after construction and safe to share
across concurrently running sessions.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field, replace
from functools import lru_cache
from pathlib import Path
from typing import Iterator, Sequence

import numpy as np

WEIGHT_TOL = 1e-9
DEFAULT_ENUMERATION_CAP = 10**6


class ValidationError(ValueError):
    """An invariant of a domain/profile/bid structure is violated."""


class InvalidBidError(ValidationError):
    """A bid does not fit the domain it is evaluated against."""


class InvalidTimeError(ValueError):
    """Normalized time outside [0, 1]."""


class ParseError(ValueError):
    """A domain or profile file is malformed."""


class OracleUnavailableError(RuntimeError):
    """Exact enumeration exceeds the configured cap."""


@dataclass(frozen=True)
class Issue:
    name: str
    values: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(self.values))
        if len(self.values) < 1:
            raise ValidationError(f"issue {self.name!r} has no values")
        if len(set(self.values)) != len(self.values):
            raise ValidationError(f"issue {self.name!r} has duplicate value labels")


@dataclass(frozen=True)
class Domain:
    name: str
    issues: tuple[Issue, ...]

    def __post_init__(self):
        object.__setattr__(self, "issues", tuple(self.issues))
        if not self.issues:
            raise ValidationError("domain has no issues")
        names = [i.name for i in self.issues]
        if len(set(names)) != len(names):
            raise ValidationError("issue names are not unique")

    @property
    def size(self) -> int:
        return math.prod(len(i.values) for i in self.issues)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(len(i.values) for i in self.issues)

    def bids(self) -> Iterator["Bid"]:
        """Enumerate the full outcome space in mixed-radix (C) order."""
        for combo in itertools.product(*(range(k) for k in self.shape)):
            yield Bid(combo)

    def bid_from_flat(self, index: int) -> "Bid":
        return Bid(tuple(int(c) for c in np.unravel_index(index, self.shape)))

    def flat_index(self, bid: "Bid") -> int:
        return int(np.ravel_multi_index(bid.values, self.shape))

    def random_bid(self, rng: np.random.Generator) -> "Bid":
        return Bid(tuple(int(rng.integers(k)) for k in self.shape))

    def labels(self, bid: "Bid") -> tuple[str, ...]:
        return tuple(issue.values[c] for issue, c in zip(self.issues, bid.values))

    def bid_from_labels(self, labels: Sequence[str]) -> "Bid":
        if len(labels) != len(self.issues):
            raise InvalidBidError("label count does not match issue count")
        values = []
        for issue, label in zip(self.issues, labels):
            try:
                values.append(issue.values.index(label))
            except ValueError:
                raise InvalidBidError(f"unknown value {label!r} for issue {issue.name!r}") from None
        return Bid(tuple(values))


@dataclass(frozen=True)
class Bid:
    """One chosen value index per issue, in issue order."""

    values: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(int(v) for v in self.values))


def check_bid(domain: Domain, bid: Bid) -> None:
    if len(bid.values) != len(domain.issues):
        raise InvalidBidError(
            f"bid has {len(bid.values)} values but domain {domain.name!r} has {len(domain.issues)} issues"
        )
    for c, k in zip(bid.values, domain.shape):
        if not 0 <= c < k:
            raise InvalidBidError(f"value index {c} out of range [0, {k})")


@dataclass(frozen=True)
class PreferenceProfile:
    """Linear additive utility: weighted sum of per-issue evaluations.

    Weights sum to 1, evaluations lie in [0, 1] with a per-issue maximum of 1,
    so the best bid always has utility exactly 1.
    """

    domain: Domain
    weights: tuple[float, ...]
    evaluations: tuple[tuple[float, ...], ...]  # aligned with domain issue/value order
    reservation: float = 0.0
    discount: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))
        object.__setattr__(
            self, "evaluations", tuple(tuple(float(e) for e in row) for row in self.evaluations)
        )
        n = len(self.domain.issues)
        if len(self.weights) != n:
            raise ValidationError("weight count does not match issue count")
        if any(w < 0 for w in self.weights):
            raise ValidationError("weights must be non-negative")
        if abs(sum(self.weights) - 1.0) > WEIGHT_TOL:
            raise ValidationError(f"weights sum to {sum(self.weights)!r}, expected 1 within {WEIGHT_TOL}")
        if len(self.evaluations) != n:
            raise ValidationError("evaluation row count does not match issue count")
        for issue, row in zip(self.domain.issues, self.evaluations):
            if len(row) != len(issue.values):
                raise ValidationError(f"evaluation count mismatch for issue {issue.name!r}")
            if any(not 0.0 <= e <= 1.0 + WEIGHT_TOL for e in row):
                raise ValidationError(f"evaluations for issue {issue.name!r} outside [0, 1]")
            if abs(max(row) - 1.0) > WEIGHT_TOL:
                raise ValidationError(f"evaluations for issue {issue.name!r} not normalized to max 1")
        if not 0.0 <= self.reservation <= 1.0:
            raise ValidationError("reservation outside [0, 1]")
        if not 0.0 <= self.discount <= 1.0:
            raise ValidationError("discount outside [0, 1]")

    @classmethod
    def from_raw(
        cls,
        domain: Domain,
        weights: Sequence[float],
        evaluations: Sequence[Sequence[float]],
        reservation: float = 0.0,
        discount: float = 1.0,
    ) -> "PreferenceProfile":
        """Build a profile, normalizing each issue's evaluations to max 1."""
        normalized = []
        for issue, row in zip(domain.issues, evaluations):
            row = [float(e) for e in row]
            top = max(row) if row else 0.0
            if top <= 0.0:
                raise ValidationError(f"issue {issue.name!r} has no positive evaluation")
            normalized.append(tuple(e / top for e in row))
        return cls(domain, tuple(float(w) for w in weights), tuple(normalized), reservation, discount)


def utility(profile: PreferenceProfile, bid: Bid) -> float:
    """Weighted sum of the chosen values' evaluations."""
    check_bid(profile.domain, bid)
    return sum(w * row[c] for w, row, c in zip(profile.weights, profile.evaluations, bid.values))


def discounted_utility(profile: PreferenceProfile, bid: Bid, t: float) -> float:
    """Utility decayed by the profile's discount factor at normalized time t."""
    if not 0.0 <= t <= 1.0:
        raise InvalidTimeError(f"normalized time {t!r} outside [0, 1]")
    return utility(profile, bid) * profile.discount**t


def utility_grid(profile: PreferenceProfile) -> np.ndarray:
    """Utilities of the entire outcome space, flattened in mixed-radix (C) order."""
    shape = profile.domain.shape
    total = np.zeros(shape)
    for axis, (w, row) in enumerate(zip(profile.weights, profile.evaluations)):
        view = [1] * len(shape)
        view[axis] = shape[axis]
        total = total + w * np.asarray(row).reshape(view)
    return total.reshape(-1)


def nondominated_mask(ua: np.ndarray, ub: np.ndarray) -> np.ndarray:
    """Boolean mask of points not dominated by any other point (maximizing both)."""
    m = len(ua)
    order = np.lexsort((-ub, -ua))
    a, b = ua[order], ub[order]
    new_group = np.empty(m, dtype=bool)
    new_group[0] = True
    new_group[1:] = a[1:] != a[:-1]
    gid = np.cumsum(new_group) - 1
    group_max = b[new_group]  # within a group b is descending, so first element is the max
    best_before = np.concatenate(([-np.inf], np.maximum.accumulate(group_max)[:-1]))
    keep_sorted = (b == group_max[gid]) & (group_max[gid] > best_before[gid])
    mask = np.zeros(m, dtype=bool)
    mask[order] = keep_sorted
    return mask


def pareto_frontier(
    profile_a: PreferenceProfile,
    profile_b: PreferenceProfile,
    cap: int = DEFAULT_ENUMERATION_CAP,
) -> list[tuple[Bid, float, float]]:
    """Exactly the non-dominated bids under both parties' utilities.

    Raises OracleUnavailableError when the outcome space exceeds ``cap``;
    callers may then fall back to a sampled frontier.
    """
    domain = profile_a.domain
    if domain != profile_b.domain:
        raise ValidationError("profiles belong to different domains")
    if domain.size > cap:
        raise OracleUnavailableError(f"|outcome space| = {domain.size} exceeds cap {cap}")
    ua = utility_grid(profile_a)
    ub = utility_grid(profile_b)
    mask = nondominated_mask(ua, ub)
    return [
        (domain.bid_from_flat(int(i)), float(ua[i]), float(ub[i])) for i in np.flatnonzero(mask)
    ]


def sampled_frontier(
    profile_a: PreferenceProfile,
    profile_b: PreferenceProfile,
    samples: int,
    rng: np.random.Generator,
) -> list[tuple[float, float]]:
    """Non-dominated utility points of a uniform bid sample (for huge domains)."""
    domain = profile_a.domain
    draws = np.column_stack([rng.integers(k, size=samples) for k in domain.shape])
    eval_a = [np.asarray(row) for row in profile_a.evaluations]
    eval_b = [np.asarray(row) for row in profile_b.evaluations]
    ua = np.zeros(samples)
    ub = np.zeros(samples)
    for i, (wa, wb) in enumerate(zip(profile_a.weights, profile_b.weights)):
        ua += wa * eval_a[i][draws[:, i]]
        ub += wb * eval_b[i][draws[:, i]]
    mask = nondominated_mask(ua, ub)
    return [(float(x), float(y)) for x, y in zip(ua[mask], ub[mask])]


def opposition(
    profile_a: PreferenceProfile,
    profile_b: PreferenceProfile,
    cap: int = DEFAULT_ENUMERATION_CAP,
) -> float:
    """Minimum distance from any outcome's utility pair to full satisfaction (1, 1)."""
    domain = profile_a.domain
    if domain.size > cap:
        raise OracleUnavailableError(f"|outcome space| = {domain.size} exceeds cap {cap}")
    ua = utility_grid(profile_a)
    ub = utility_grid(profile_b)
    return float(np.sqrt((1.0 - ua) ** 2 + (1.0 - ub) ** 2).min())


class OutcomePool:
    """Utility-sorted view of the outcome space for one profile.

    Enumerated exactly up to ``cap`` bids, otherwise a uniform sample. Backs
    target-utility lookups for time-dependent bidding and random-above draws.
    """

    def __init__(self, bids: list[Bid], utilities: np.ndarray):
        order = np.argsort(utilities, kind="stable")
        self.bids = [bids[i] for i in order]
        self.utilities = utilities[order]

    @classmethod
    def build(
        cls,
        profile: PreferenceProfile,
        cap: int = DEFAULT_ENUMERATION_CAP,
        sample: int = 10**5,
        rng: np.random.Generator | None = None,
    ) -> "OutcomePool":
        domain = profile.domain
        if domain.size <= cap:
            utilities = utility_grid(profile)
            bids = [domain.bid_from_flat(i) for i in range(domain.size)]
        else:
            rng = rng or np.random.default_rng(0)
            draws = np.column_stack([rng.integers(k, size=sample) for k in domain.shape])
            utilities = np.zeros(sample)
            for i, (w, row) in enumerate(zip(profile.weights, profile.evaluations)):
                utilities += w * np.asarray(row)[draws[:, i]]
            bids = [Bid(tuple(int(v) for v in draws[j])) for j in range(sample)]
        return cls(bids, utilities)

    def __len__(self) -> int:
        return len(self.bids)

    @property
    def best(self) -> Bid:
        return self.bids[-1]

    def at_or_above(self, target: float) -> Bid:
        """Bid with utility closest to target from above; closest overall if none above."""
        i = int(np.searchsorted(self.utilities, target, side="left"))
        if i >= len(self.bids):
            return self.bids[-1]
        return self.bids[i]

    def first_index_at_or_above(self, threshold: float) -> int:
        return int(np.searchsorted(self.utilities, threshold, side="left"))

    def random_at_or_above(self, threshold: float, rng: np.random.Generator) -> Bid | None:
        """Uniform draw from the bids with utility >= threshold, or None if empty."""
        i = self.first_index_at_or_above(threshold)
        if i >= len(self.bids):
            return None
        return self.bids[int(rng.integers(i, len(self.bids)))]


@lru_cache(maxsize=64)
def enumerated_pool(profile: PreferenceProfile, cap: int = DEFAULT_ENUMERATION_CAP) -> OutcomePool:
    """Cached full-enumeration pool; only valid for domains within the cap."""
    if profile.domain.size > cap:
        raise OracleUnavailableError(f"|outcome space| = {profile.domain.size} exceeds cap {cap}")
    return OutcomePool.build(profile, cap=cap)


def get_pool(
    profile: PreferenceProfile,
    cap: int = DEFAULT_ENUMERATION_CAP,
    sample: int = 10**5,
    rng: np.random.Generator | None = None,
) -> OutcomePool:
    if profile.domain.size <= cap:
        return enumerated_pool(profile, cap)
    return OutcomePool.build(profile, cap=cap, sample=sample, rng=rng)


# ---------------------------------------------------------------------------
# File formats (JSON, bit-exact round trip)
# ---------------------------------------------------------------------------


def _require(mapping: dict, key: str, where: str):
    if key not in mapping:
        raise ParseError(f"{where}: missing field {key!r}")
    return mapping[key]


def _load_json(path: str | Path, where: str) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ParseError(f"{where}: cannot read {path}: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{where}: invalid JSON at line {exc.lineno} column {exc.colno}") from exc
    if not isinstance(data, dict):
        raise ParseError(f"{where}: top level must be an object")
    return data


def parse_domain(path: str | Path) -> Domain:
    data = _load_json(path, "domain file")
    issues = []
    for idx, raw in enumerate(_require(data, "issues", "domain file")):
        name = _require(raw, "name", f"issue #{idx}")
        values = _require(raw, "values", f"issue {name!r}")
        if not isinstance(values, list) or not all(isinstance(v, str) for v in values):
            raise ParseError(
                f"issue {name!r}: values must be a list of discrete labels (continuous issues are unsupported)"
            )
        issues.append(Issue(str(name), tuple(values)))
    return Domain(str(_require(data, "name", "domain file")), tuple(issues))


def save_domain(domain: Domain, path: str | Path) -> None:
    data = {
        "name": domain.name,
        "issues": [{"name": i.name, "values": list(i.values)} for i in domain.issues],
    }
    Path(path).write_text(json.dumps(data, indent=2) + "\n")


def parse_profile(path: str | Path, domain: Domain) -> PreferenceProfile:
    data = _load_json(path, "profile file")
    declared = _require(data, "domain", "profile file")
    if declared != domain.name:
        raise ParseError(f"profile file: domain {declared!r} does not match {domain.name!r}")
    weights = _require(data, "weights", "profile file")
    if not isinstance(weights, list) or not all(isinstance(w, (int, float)) for w in weights):
        raise ParseError("profile file: weights must be a list of reals")
    raw_evals = _require(data, "evaluations", "profile file")
    rows = []
    for issue in domain.issues:
        if issue.name not in raw_evals:
            raise ParseError(f"profile file: no evaluations for issue {issue.name!r}")
        table = raw_evals[issue.name]
        row = []
        for value in issue.values:
            if value not in table:
                raise ParseError(f"profile file: issue {issue.name!r} missing value {value!r}")
            row.append(float(table[value]))
        rows.append(row)
    return PreferenceProfile.from_raw(
        domain,
        weights,
        rows,
        reservation=float(data.get("reservation", 0.0)),
        discount=float(data.get("discount", 1.0)),
    )


def save_profile(profile: PreferenceProfile, path: str | Path) -> None:
    evaluations = {
        issue.name: {value: e for value, e in zip(issue.values, row)}
        for issue, row in zip(profile.domain.issues, profile.evaluations)
    }
    data = {
        "domain": profile.domain.name,
        "weights": list(profile.weights),
        "evaluations": evaluations,
        "reservation": profile.reservation,
        "discount": profile.discount,
    }
    Path(path).write_text(json.dumps(data, indent=2) + "\n")


# ---------------------------------------------------------------------------
# Scenario generation
# ---------------------------------------------------------------------------

OPPOSITION_CLASSES = {"low": (0.0, 0.12), "medium": (0.12, 0.28), "high": (0.28, 2.0)}


@dataclass(frozen=True)
class Scenario:
    domain: Domain
    profile_a: PreferenceProfile
    profile_b: PreferenceProfile


def _random_weights(n: int, rng: np.random.Generator) -> np.ndarray:
    raw = rng.random(n) + 0.25
    return raw / raw.sum()


def generate_scenario(
    issues: int,
    values: int | Sequence[int],
    rng: np.random.Generator,
    opposition_class: str = "any",
    name: str | None = None,
    reservation: float = 0.0,
    discount: float = 1.0,
    max_tries: int = 400,
) -> Scenario:
    """Random domain plus two profiles, rejection-sampled into an opposition class."""
    if opposition_class != "any" and opposition_class not in OPPOSITION_CLASSES:
        raise ValidationError(f"unknown opposition class {opposition_class!r}")
    counts = [values] * issues if isinstance(values, int) else list(values)
    if len(counts) != issues:
        raise ValidationError("per-issue value counts do not match issue count")
    name = name or f"gen-{'x'.join(str(k) for k in counts)}"
    domain = Domain(
        name,
        tuple(
            Issue(f"issue{i + 1}", tuple(f"v{i + 1}_{j + 1}" for j in range(k)))
            for i, k in enumerate(counts)
        ),
    )

    def draw(correlation: float) -> Scenario:
        rows_a, rows_b = [], []
        for k in counts:
            a = rng.random(k)
            if correlation >= 0.0:
                b = correlation * a + (1.0 - correlation) * rng.random(k)
            else:
                b = (a.max() - a) + 0.15 * rng.random(k)
            rows_a.append(a)
            rows_b.append(np.maximum(b, 1e-6))
        pa = PreferenceProfile.from_raw(domain, _random_weights(issues, rng), rows_a, reservation, discount)
        pb = PreferenceProfile.from_raw(domain, _random_weights(issues, rng), rows_b, reservation, discount)
        return Scenario(domain, pa, pb)

    if opposition_class == "any":
        return draw(0.0)

    lo, hi = OPPOSITION_CLASSES[opposition_class]
    recipes = {"low": (0.9, 0.5, 0.0), "medium": (0.0, 0.4, -1.0), "high": (-1.0, 0.0, -0.5)}
    for attempt in range(max_tries):
        corr = recipes[opposition_class][attempt % 3]
        scenario = draw(corr)
        opp = opposition(scenario.profile_a, scenario.profile_b)
        if lo <= opp < hi:
            return scenario
    raise ValidationError(
        f"could not sample a {opposition_class}-opposition scenario in {max_tries} tries"
    )


def write_scenario(scenario: Scenario, out_dir: str | Path) -> dict[str, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "domain": out / "domain.json",
        "profile_a": out / "profile_a.json",
        "profile_b": out / "profile_b.json",
    }
    save_domain(scenario.domain, paths["domain"])
    save_profile(scenario.profile_a, paths["profile_a"])
    save_profile(scenario.profile_b, paths["profile_b"])
    return paths


def read_scenario(directory: str | Path) -> Scenario:
    directory = Path(directory)
    domain = parse_domain(directory / "domain.json")
    return Scenario(
        domain,
        parse_profile(directory / "profile_a.json", domain),
        parse_profile(directory / "profile_b.json", domain),
    )
