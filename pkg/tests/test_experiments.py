import jsonschema
import pytest

from rlogic.experiments import (EXPERIMENTS, FAIL, INFO, PASS, REPORT_SCHEMA, BirthdayParams, ExperimentReport,
                                central_binomial_probability, injective_probability)
from fractions import Fraction


def test_report_verdicts():
    rep = ExperimentReport("demo", {}, 0)
    rep.add("a", "AC1", 1, 1, True)
    rep.add("b", "AC1", 2, None)
    rep.add("c", "AC2", Fraction(1, 2), "1/2", False, "note")
    assert [c.verdict for c in rep.checks] == [PASS, INFO, FAIL]
    assert not rep.passed
    assert rep.by_criterion() == {"AC1": PASS, "AC2": FAIL}
    doc = rep.to_dict()
    assert doc["checks"][2]["observed"] == "1/2"


def test_report_schema_rejects_unknown_criterion():
    rep = ExperimentReport("demo", {}, 0)
    rep.add("a", "AC12", 1, 1, True)
    with pytest.raises(jsonschema.ValidationError):
        rep.to_dict()


def test_informational_never_fails():
    rep = ExperimentReport("demo", {}, 0)
    rep.add("a", "AC10", 0.3, None)
    assert rep.passed and rep.by_criterion() == {"AC10": INFO}


def test_birthday_params():
    p = BirthdayParams()
    assert p.n_c >= 1
    with pytest.raises(ValueError):
        BirthdayParams(c=1.0)
    with pytest.raises(ValueError):
        BirthdayParams(epsilon1=0)


def test_oracles():
    assert injective_probability(3, 4) == Fraction(4 * 3 * 2, 64)
    assert injective_probability(5, 4) == 0
    assert central_binomial_probability(1) == Fraction(1, 2)
    assert central_binomial_probability(2) == Fraction(6, 16)


def test_registry_names():
    assert set(EXPERIMENTS) == {"birthday", "cfi", "rescher", "sparse", "amplification", "derand"}
    assert "checks" in REPORT_SCHEMA["properties"]
