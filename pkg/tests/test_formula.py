import pytest

from priorsketch.formula import (FormulaError, ModelSpec, ParameterSpec, VariableSpec,
                                 format_model, parse_model)


def test_parse_with_default_intercept():
    model = parse_model("income ~ age + education_years")
    assert model.response == "income"
    assert model.predictors == ("age", "education_years")
    assert model.has_intercept
    assert model.parameter_names == (
        "intercept", "coef_age", "coef_education_years", "sigma")


def test_parse_without_intercept():
    model = parse_model("y ~ 0 + x")
    assert not model.has_intercept
    assert model.parameter_names == ("coef_x", "sigma")
    assert model.linear_parameter_count == 1


def test_parse_explicit_intercept():
    assert parse_model("y ~ 1 + x") == parse_model("y ~ x")


def test_whitespace_is_irrelevant():
    assert parse_model("y~x1+x2") == parse_model("  y ~ x1   + x2 ")


def test_variables_order_predictors_then_response():
    model = parse_model("y ~ 0 + b + a")
    assert model.variables == ("b", "a", "y")


def test_parameter_kinds_and_links():
    model = parse_model("y ~ x1 + x2")
    kinds = [(p.name, p.kind, p.linked_predictor) for p in model.parameters]
    assert kinds == [
        ("intercept", "intercept", None),
        ("coef_x1", "coefficient", "x1"),
        ("coef_x2", "coefficient", "x2"),
        ("sigma", "noise_scale", None),
    ]
    assert model.parameters[-1].kind == "noise_scale"


def test_format_model_round_trips():
    for text in ("y ~ x", "y ~ 0 + x", "income ~ age + education_years",
                 "y ~ 1 + a + b + c", "out_5 ~ 0 + _x + x0"):
        model = parse_model(text)
        assert parse_model(format_model(model)) == model


def test_format_model_is_canonical():
    assert format_model(parse_model("y~1+x")) == "y ~ x"
    assert format_model(parse_model("y~0+x1+x2")) == "y ~ 0 + x1 + x2"


@pytest.mark.parametrize("bad", [
    "", "   ", "y", "y ~", "~ x", "y ~ +", "y ~ x +", "y ~ x ~ z",
    "y ~ 0", "y ~ 1", "y ~ 0 +", "y ~ x x", "y ~ 2 + x", "y ~ 0age",
    "y y ~ x", "y ~ x + x", "y ~ y", "y ~ x + y", "y ~ x-1",
])
def test_rejects_malformed(bad):
    with pytest.raises(FormulaError):
        parse_model(bad)


def test_error_reports_position():
    with pytest.raises(FormulaError) as err:
        parse_model("y ~ a + a")
    assert err.value.position == 8
    assert "(at position 8)" in err.value.message


def test_duplicate_predictor_message_names_it():
    with pytest.raises(FormulaError, match="duplicate predictor 'x'"):
        parse_model("y ~ x + x")


def test_response_reuse_rejected():
    with pytest.raises(FormulaError, match="'y' cannot appear as a predictor"):
        parse_model("y ~ a + y")


def test_variable_spec_defaults():
    spec = VariableSpec("age", "predictor")
    assert spec.range == (0.0, 100.0)
    assert spec.bin_count == 10
    assert spec.bin_width == 10.0


@pytest.mark.parametrize("kwargs", [
    dict(name="1bad", role="predictor"),
    dict(name="a b", role="predictor"),
    dict(name="x", role="thing"),
    dict(name="x", role="predictor", range=(5.0, 5.0)),
    dict(name="x", role="predictor", range=(10.0, 0.0)),
    dict(name="x", role="predictor", bin_count=1),
])
def test_variable_spec_validation(kwargs):
    with pytest.raises(ValueError):
        VariableSpec(**kwargs)


def test_parameter_spec_link_consistency():
    with pytest.raises(ValueError):
        ParameterSpec("coef_x", "coefficient")
    with pytest.raises(ValueError):
        ParameterSpec("intercept", "intercept", linked_predictor="x")


def test_model_spec_direct_construction_validation():
    with pytest.raises(ValueError):
        ModelSpec(response="y", predictors=())
    with pytest.raises(ValueError):
        ModelSpec(response="y", predictors=("x", "x"))
    with pytest.raises(ValueError):
        ModelSpec(response="y", predictors=("y",))
