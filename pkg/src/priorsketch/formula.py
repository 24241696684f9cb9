"""Model formula parsing.

A model is written as ``response ~ predictor + predictor + ...`` with an
optional leading ``0 +`` (no intercept) or ``1 +`` (explicit intercept)
on the right-hand side. Only identity-link linear models over continuous
variables are supported; the fitted parameters are the intercept (if
any), one coefficient per predictor, and the residual noise scale.
"""

import re
from dataclasses import dataclass, field

from .errors import DomainError

IDENTIFIER = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")

DEFAULT_RANGE = (0.0, 100.0)
DEFAULT_BIN_COUNT = 10


class FormulaError(DomainError):
    """Malformed model formula; `position` is the offending character offset."""

    code = "invalid_formula"

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at position {position})", position=position)
        self.position = position


@dataclass(frozen=True)
class VariableSpec:
    """One model variable with its display/binning configuration."""

    name: str
    role: str  # "predictor" | "response"
    range: tuple[float, float] = DEFAULT_RANGE
    bin_count: int = DEFAULT_BIN_COUNT

    def __post_init__(self):
        if not IDENTIFIER.fullmatch(self.name):
            raise ValueError(f"invalid variable name {self.name!r}")
        if self.role not in ("predictor", "response"):
            raise ValueError(f"invalid role {self.role!r}")
        lo, hi = self.range
        if not lo < hi:
            raise ValueError(f"variable {self.name}: range must satisfy lo < hi, got [{lo}, {hi}]")
        if self.bin_count < 2:
            raise ValueError(f"variable {self.name}: bin_count must be >= 2")

    @property
    def bin_width(self) -> float:
        lo, hi = self.range
        return (hi - lo) / self.bin_count


@dataclass(frozen=True)
class ParameterSpec:
    """One fitted model parameter."""

    name: str
    kind: str  # "intercept" | "coefficient" | "noise_scale"
    linked_predictor: str | None = None

    def __post_init__(self):
        if (self.kind == "coefficient") != (self.linked_predictor is not None):
            raise ValueError("linked_predictor is set exactly for coefficient parameters")


@dataclass(frozen=True)
class ModelSpec:
    """A parsed linear model: response, ordered predictors, intercept flag.

    The parameter list is derived: intercept (if enabled), then one
    coefficient per predictor in predictor order, then the noise scale,
    which is always last.
    """

    response: str
    predictors: tuple[str, ...]
    has_intercept: bool = True
    parameters: tuple[ParameterSpec, ...] = field(init=False, compare=False)

    def __post_init__(self):
        if not self.predictors:
            raise ValueError("model needs at least one predictor")
        if len(set(self.predictors)) != len(self.predictors):
            raise ValueError("duplicate predictor")
        if self.response in self.predictors:
            raise ValueError("response cannot also be a predictor")
        params = []
        if self.has_intercept:
            params.append(ParameterSpec("intercept", "intercept"))
        for pred in self.predictors:
            params.append(ParameterSpec(f"coef_{pred}", "coefficient", linked_predictor=pred))
        params.append(ParameterSpec("sigma", "noise_scale"))
        object.__setattr__(self, "parameters", tuple(params))

    @property
    def variables(self) -> tuple[str, ...]:
        """All variable names, predictors first, response last."""
        return self.predictors + (self.response,)

    @property
    def linear_parameter_count(self) -> int:
        """Number of parameters fitted by least squares (excludes the noise scale)."""
        return len(self.predictors) + (1 if self.has_intercept else 0)

    @property
    def parameter_names(self) -> tuple[str, ...]:
        return tuple(p.name for p in self.parameters)

    def default_variables(self) -> list[VariableSpec]:
        """VariableSpecs for every model variable at the default range/bins."""
        specs = [VariableSpec(name, "predictor") for name in self.predictors]
        specs.append(VariableSpec(self.response, "response"))
        return specs


def _tokenize(text: str):
    tokens = []
    pos = 0
    while pos < len(text):
        ch = text[pos]
        if ch.isspace():
            pos += 1
            continue
        if ch in "~+":
            tokens.append((ch, ch, pos))
            pos += 1
            continue
        if ch in "01" and not (pos + 1 < len(text) and (text[pos + 1].isalnum() or text[pos + 1] == "_")):
            tokens.append(("const", ch, pos))
            pos += 1
            continue
        m = IDENTIFIER.match(text, pos)
        if m:
            tokens.append(("name", m.group(), pos))
            pos = m.end()
            continue
        raise FormulaError(f"unexpected character {ch!r}", pos)
    tokens.append(("end", "", len(text)))
    return tokens


def parse_model(formula_text: str) -> ModelSpec:
    """Parse a formula string into a ModelSpec.

    Raises FormulaError (with the source position) on syntax errors,
    duplicate predictors, or a response reused as a predictor.
    """
    if not formula_text.strip():
        raise FormulaError("empty formula", 0)
    tokens = _tokenize(formula_text)
    i = 0

    def expect(kind):
        nonlocal i
        tok = tokens[i]
        if tok[0] != kind:
            raise FormulaError(f"expected {kind}, found {tok[1]!r}" if tok[1] else f"expected {kind}", tok[2])
        i += 1
        return tok

    response = expect("name")[1]
    expect("~")

    has_intercept = True
    if tokens[i][0] == "const":
        const_tok = tokens[i]
        i += 1
        expect("+")
        has_intercept = const_tok[1] == "1"

    predictors = []
    while True:
        tok = expect("name")
        if tok[1] == response:
            raise FormulaError(f"response {response!r} cannot appear as a predictor", tok[2])
        if tok[1] in predictors:
            raise FormulaError(f"duplicate predictor {tok[1]!r}", tok[2])
        predictors.append(tok[1])
        if tokens[i][0] == "+":
            i += 1
            continue
        break
    if tokens[i][0] != "end":
        raise FormulaError(f"unexpected {tokens[i][1]!r} after formula", tokens[i][2])

    return ModelSpec(response=response, predictors=tuple(predictors), has_intercept=has_intercept)


def format_model(model: ModelSpec) -> str:
    """Canonical formula text; parse_model(format_model(m)) == m."""
    rhs = " + ".join(model.predictors)
    if not model.has_intercept:
        rhs = "0 + " + rhs
    return f"{model.response} ~ {rhs}"
