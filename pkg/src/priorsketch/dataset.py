"""The analyst-built dataset.

Entities are rows with possibly-missing values. Every view (histograms,
marginals, complete rows) is a pure function of the entity list, and all
mutations re-check the range/uniqueness invariants before returning.
Mutations bump a version counter only when observable state actually
changed; connect plans are validated against that counter so a preview
can never be committed over a dataset that moved underneath it.
"""

import re
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError
from .formula import ModelSpec, VariableSpec
from .rng import PAIRING, substream

ENTITY_ID = re.compile(r"e([0-9]+)")


class UnknownVariable(DomainError):
    code = "unknown_variable"
    http_status = 404


class UnknownEntity(DomainError):
    code = "unknown_entity"
    http_status = 404


class ValueOutOfRange(DomainError):
    code = "value_out_of_range"


class ValueNotDefined(DomainError):
    code = "value_not_defined"


class InvalidInterval(DomainError):
    code = "invalid_interval"


class InvalidBinning(DomainError):
    code = "invalid_binning"


class BinningConflict(DomainError):
    """Narrowing a range would orphan stored values and force was not set."""

    code = "binning_conflict"
    http_status = 409


class InvalidGenerate(DomainError):
    code = "invalid_generate"


class InvalidGroups(DomainError):
    code = "invalid_groups"


class StalePlan(DomainError):
    """The dataset changed between preview and connect."""

    code = "stale_plan"
    http_status = 409


@dataclass
class Entity:
    """One row: an opaque id and a partial variable → value map."""

    id: str
    values: dict[str, float]


@dataclass(frozen=True)
class Selection:
    """Cross-filter state: closed per-variable intervals plus a completeness mode."""

    brushes: dict[str, tuple[float, float]] = field(default_factory=dict)
    mode: str = "complete"

    def __post_init__(self):
        if self.mode not in ("complete", "incomplete"):
            raise ValueError(f"invalid selection mode {self.mode!r}")


@dataclass(frozen=True)
class ConnectPlan:
    """Planned merges from preview_connections, pinned to a dataset version.

    Each merge lists the source entity ids (one per group, in group order)
    that will be replaced by a single union entity.
    """

    dataset_version: int
    merges: tuple[tuple[str, ...], ...]

    @property
    def merge_count(self) -> int:
        return len(self.merges)


class Dataset:
    """Mutable session dataset over a fixed set of model variables."""

    def __init__(self, variables, seed: int = 0):
        self.variables: dict[str, VariableSpec] = {}
        for spec in variables:
            if spec.name in self.variables:
                raise ValueError(f"duplicate variable {spec.name!r}")
            self.variables[spec.name] = spec
        if not self.variables:
            raise ValueError("dataset needs at least one variable")
        self.entities: list[Entity] = []
        self.seed = int(seed)
        self.version = 0
        self._rng = np.random.default_rng(self.seed)
        self._next_id = 1

    @classmethod
    def for_model(cls, model: ModelSpec, seed: int = 0) -> "Dataset":
        """Empty dataset with default-configured variables, predictors first."""
        return cls(model.default_variables(), seed=seed)

    # -- lookups ------------------------------------------------------------

    def variable(self, name: str) -> VariableSpec:
        try:
            return self.variables[name]
        except KeyError:
            raise UnknownVariable(f"unknown variable {name!r}", variable=name) from None

    def entity(self, entity_id: str) -> Entity:
        for ent in self.entities:
            if ent.id == entity_id:
                return ent
        raise UnknownEntity(f"unknown entity {entity_id!r}", entity_id=entity_id)

    def is_complete(self, entity: Entity) -> bool:
        return len(entity.values) == len(self.variables)

    def marginal(self, name: str) -> np.ndarray:
        """Defined values of one variable, in entity insertion order."""
        self.variable(name)
        return np.array([ent.values[name] for ent in self.entities if name in ent.values], dtype=float)

    def bin_edges(self, name: str) -> np.ndarray:
        spec = self.variable(name)
        return np.linspace(spec.range[0], spec.range[1], spec.bin_count + 1)

    def bin_center(self, name: str, index: int) -> float:
        spec = self.variable(name)
        if not 0 <= index < spec.bin_count:
            raise InvalidBinning(f"bin index {index} out of range for {name!r}", variable=name)
        return spec.range[0] + (index + 0.5) * spec.bin_width

    def histogram(self, name: str) -> list[tuple[tuple[float, float], int]]:
        """Per-bin ((lo, hi), count); the last bin includes its upper edge."""
        edges = self.bin_edges(name)
        values = self.marginal(name)
        idx = np.searchsorted(edges, values, side="right") - 1
        idx = np.clip(idx, 0, len(edges) - 2)
        counts = np.bincount(idx, minlength=len(edges) - 1)
        return [((float(edges[i]), float(edges[i + 1])), int(counts[i])) for i in range(len(edges) - 1)]

    # -- mutations ----------------------------------------------------------

    def _fresh_entity(self, values: dict[str, float]) -> Entity:
        ent = Entity(id=f"e{self._next_id}", values=values)
        self._next_id += 1
        self.entities.append(ent)
        return ent

    def _check_value(self, name: str, value: float) -> float:
        spec = self.variable(name)
        value = float(value)
        if not np.isfinite(value):
            raise ValueOutOfRange(f"value for {name!r} must be finite", variable=name)
        lo, hi = spec.range
        if not lo <= value <= hi:
            raise ValueOutOfRange(
                f"value {value} for {name!r} outside range [{lo}, {hi}]", variable=name, value=value
            )
        return value

    def add_value(self, name: str, value: float) -> str:
        """Append a new single-value entity; returns its id."""
        value = self._check_value(name, value)
        ent = self._fresh_entity({name: value})
        self.version += 1
        self._check_invariants()
        return ent.id

    def remove_value(self, entity_id: str, name: str) -> None:
        """Drop one value; the entity itself is deleted if nothing remains."""
        ent = self.entity(entity_id)
        self.variable(name)
        if name not in ent.values:
            raise ValueNotDefined(f"{name!r} is not defined on entity {entity_id!r}",
                                  entity_id=entity_id, variable=name)
        del ent.values[name]
        if not ent.values:
            self.entities.remove(ent)
        self.version += 1
        self._check_invariants()

    def set_binning(self, name: str, bin_count: int, range_: tuple[float, float],
                    force: bool = False) -> list[str]:
        """Reconfigure a variable's bins and range.

        Atomic: if stored values fall outside the new range the call fails
        without side effects unless `force` is set, in which case those
        values are dropped (entities emptied by the drop are deleted).
        Returns the ids of entities that lost their value.
        """
        old = self.variable(name)
        lo, hi = float(range_[0]), float(range_[1])
        if not (np.isfinite(lo) and np.isfinite(hi) and lo < hi):
            raise InvalidBinning(f"range must satisfy lo < hi, got [{lo}, {hi}]", variable=name)
        if bin_count < 2:
            raise InvalidBinning(f"bin_count must be >= 2, got {bin_count}", variable=name)
        orphaned = [ent.id for ent in self.entities
                    if name in ent.values and not lo <= ent.values[name] <= hi]
        if orphaned and not force:
            raise BinningConflict(
                f"new range for {name!r} would drop {len(orphaned)} stored value(s)",
                variable=name, entity_ids=orphaned)
        new = VariableSpec(name=name, role=old.role, range=(lo, hi), bin_count=int(bin_count))
        if new == old and not orphaned:
            return []
        for entity_id in orphaned:
            ent = self.entity(entity_id)
            del ent.values[name]
            if not ent.values:
                self.entities.remove(ent)
        self.variables[name] = new
        self.version += 1
        self._check_invariants()
        return orphaned

    def generate_entities(self, constraints: dict[str, tuple[float, float]], count: int) -> list[str]:
        """Sample `count` new entities uniformly inside the constrained box.

        Each constrained variable is drawn independently and uniformly
        within its interval; unconstrained variables stay undefined. Draws
        come from the dataset's own generator, so repeating the same
        operation log under the same seed reproduces the same values.
        """
        if count < 0:
            raise InvalidGenerate(f"count must be >= 0, got {count}")
        if not constraints:
            raise InvalidGenerate("constraints must name at least one variable")
        checked = {}
        for name, interval in constraints.items():
            spec = self.variable(name)
            lo, hi = float(interval[0]), float(interval[1])
            if not (np.isfinite(lo) and np.isfinite(hi) and lo <= hi):
                raise InvalidInterval(f"invalid interval [{lo}, {hi}] for {name!r}", variable=name)
            if lo < spec.range[0] or hi > spec.range[1]:
                raise InvalidInterval(
                    f"interval [{lo}, {hi}] for {name!r} outside range "
                    f"[{spec.range[0]}, {spec.range[1]}]", variable=name)
            checked[name] = (lo, hi)
        if count == 0:
            return []
        # Draw in variable declaration order so results do not depend on
        # the order the caller happened to list the constraints in.
        ordered = [name for name in self.variables if name in checked]
        ids = []
        for _ in range(count):
            values = {name: float(self._rng.uniform(*checked[name])) for name in ordered}
            ids.append(self._fresh_entity(values).id)
        self.version += 1
        self._check_invariants()
        return ids

    # -- connect ------------------------------------------------------------

    def preview_connections(self, groups: list[tuple[object, list[str]]]) -> ConnectPlan:
        """Plan merges across brushed groups without mutating anything.

        Each group is (variable names, entity ids). Eligible entities are
        the selected incomplete ones; an entity selected in more than one
        group is excluded from all of them. The plan aims for the minimum
        eligible count across groups, pairing entities by seeded random
        permutation; an entity whose defined variables overlap the merge
        being assembled is skipped in favor of the next permutation
        element (it stays available for later merges), and a pick that
        leaves a later group unfillable is advanced the same way.
        """
        if len(groups) < 2:
            raise InvalidGroups(f"need at least 2 groups, got {len(groups)}")
        for vars_, entity_ids in groups:
            for name in vars_:
                self.variable(name)
            for entity_id in entity_ids:
                self.entity(entity_id)
        seen: dict[str, int] = {}
        for _, entity_ids in groups:
            for entity_id in set(entity_ids):
                seen[entity_id] = seen.get(entity_id, 0) + 1
        eligible = []
        for _, entity_ids in groups:
            members = []
            for entity_id in dict.fromkeys(entity_ids):
                ent = self.entity(entity_id)
                if seen[entity_id] == 1 and not self.is_complete(ent):
                    members.append(ent)
            eligible.append(members)

        target = min(len(members) for members in eligible)
        if target == 0:
            return ConnectPlan(dataset_version=self.version, merges=())

        # Pure function of (seed, version): previewing twice without an
        # intervening mutation yields the identical plan, and planning
        # never consumes the dataset's own generator.
        rng = substream(self.seed, PAIRING, self.version)
        orders = [[members[i] for i in rng.permutation(len(members))] for members in eligible]

        merges = []
        used: set[str] = set()
        for _ in range(target):
            picked = self._fill_merge(orders, used)
            if picked is None:
                break
            used.update(ent.id for ent in picked)
            merges.append(tuple(ent.id for ent in picked))
        return ConnectPlan(dataset_version=self.version, merges=tuple(merges))

    @staticmethod
    def _fill_merge(orders: list[list[Entity]], used: set[str]) -> list[Entity] | None:
        """One merge: pick a still-available entity per group, in group order.

        Candidates are tried in permutation order; a conflicting or taken
        candidate is skipped, and a group that cannot be completed sends
        the search back to advance the previous group's pick. Group count
        is the recursion depth (a handful of brushed axes in practice).
        """
        picked: list[Entity] = []

        def extend(group_index: int) -> bool:
            if group_index == len(orders):
                return True
            picked_ids = {ent.id for ent in picked}
            picked_vars = {name for ent in picked for name in ent.values}
            for ent in orders[group_index]:
                if ent.id in used or ent.id in picked_ids:
                    continue
                if picked_vars.isdisjoint(ent.values):
                    picked.append(ent)
                    if extend(group_index + 1):
                        return True
                    picked.pop()
            return False

        return picked if extend(0) else None

    def connect(self, plan: ConnectPlan) -> list[str]:
        """Commit a previewed plan: each merge unions its sources into one entity.

        The (variable, value) multiset over the dataset is conserved:
        sources are removed and exactly their values reappear on the
        merged entity.
        """
        if plan.dataset_version != self.version:
            raise StalePlan(
                f"plan was built against dataset version {plan.dataset_version}, "
                f"current version is {self.version}",
                plan_version=plan.dataset_version, dataset_version=self.version)
        merge_sources = []
        claimed: set[str] = set()
        for merge in plan.merges:
            sources = [self.entity(entity_id) for entity_id in merge]
            union: set[str] = set()
            for ent in sources:
                if ent.id in claimed or not union.isdisjoint(ent.values):
                    raise StalePlan("plan no longer satisfies the disjointness precondition")
                claimed.add(ent.id)
                union |= set(ent.values)
            merge_sources.append(sources)
        if not merge_sources:
            return []
        merged_ids = []
        for sources in merge_sources:
            values: dict[str, float] = {}
            for ent in sources:
                values.update(ent.values)
                self.entities.remove(ent)
            merged_ids.append(self._fresh_entity(values).id)
        self.version += 1
        self._check_invariants()
        return merged_ids

    # -- views --------------------------------------------------------------

    def query(self, selection: Selection) -> list[str]:
        """Ids of entities matching the mode and every brush, in insertion order.

        An entity lacking a brushed variable's value never matches.
        """
        for name, interval in selection.brushes.items():
            spec = self.variable(name)
            lo, hi = float(interval[0]), float(interval[1])
            if not lo <= hi:
                raise InvalidInterval(f"invalid brush [{lo}, {hi}] on {name!r}", variable=name)
            if lo < spec.range[0] or hi > spec.range[1]:
                raise InvalidInterval(
                    f"brush [{lo}, {hi}] on {name!r} outside range "
                    f"[{spec.range[0]}, {spec.range[1]}]", variable=name)
        want_complete = selection.mode == "complete"
        matched = []
        for ent in self.entities:
            if self.is_complete(ent) != want_complete:
                continue
            ok = True
            for name, interval in selection.brushes.items():
                value = ent.values.get(name)
                if value is None or not interval[0] <= value <= interval[1]:
                    ok = False
                    break
            if ok:
                matched.append(ent.id)
        return matched

    def complete_rows(self, columns=None) -> np.ndarray:
        """Matrix of complete entities, one row each, in insertion order.

        Column order defaults to variable declaration order (predictors
        first, response last for model-built datasets).
        """
        if columns is None:
            columns = list(self.variables)
        else:
            columns = list(columns)
            for name in columns:
                self.variable(name)
        rows = [[ent.values[name] for name in columns]
                for ent in self.entities if self.is_complete(ent)]
        return np.array(rows, dtype=float).reshape(len(rows), len(columns))

    # -- integrity ----------------------------------------------------------

    def _check_invariants(self):
        seen: set[str] = set()
        for ent in self.entities:
            if ent.id in seen:
                raise AssertionError(f"duplicate entity id {ent.id!r}")
            seen.add(ent.id)
            if not ent.values:
                raise AssertionError(f"entity {ent.id!r} has no values")
            for name, value in ent.values.items():
                spec = self.variables.get(name)
                if spec is None:
                    raise AssertionError(f"entity {ent.id!r} holds unknown variable {name!r}")
                if not spec.range[0] <= value <= spec.range[1]:
                    raise AssertionError(f"entity {ent.id!r} value {name}={value} out of range")
