from fractions import Fraction

import pytest

from qcore.catalog import (CatalogError, CongruenceFamily, IdentityRecord, IntFormula, LinearRelation,
                           Transform, apply_pipeline, default_path, dumps, load, loads, parse_pipeline,
                           pipeline_source_prec)
from qcore.series import LaurentSeries as S

HEADER = "qcore-catalog 1\n"


def test_default_catalog_size():
    cat = load()
    assert len(cat.identities) >= 24
    assert {type(r) for r in cat} == {IdentityRecord, CongruenceFamily, LinearRelation}


def test_first_dissection_record():
    rec = load().get("eq2.1")
    assert rec.lhs == "f2^2/f1"
    assert rec.rhs == "f6*f9^2/(f3*f18) + q*f18^2/f9"
    assert rec.window == (0, 300)
    assert rec.pipeline == ()


def test_required_entries_present():
    ids = set(load().ids())
    wanted = {f"eq2.{i}" for i in range(1, 20)} | {
        "lemma2.5", "thm3.1", "thm3.2-9n4", "thm3.2-9n7", "eq3.4", "eq3.5", "eq3.6", "eq3.10", "eq3.11",
        "eq3.14", "eq3.17-r1", "eq3.17-r2", "eq3.18", "thm3.6", "cong3.2", "cong3.7", "cong1.3"}
    assert wanted <= ids


def test_zero_extraction_records():
    cat = load()
    for rid, r in (("eq3.17-r1", 1), ("eq3.17-r2", 2)):
        rec = cat.get(rid)
        assert rec.rhs == "0"
        assert rec.pipeline[-1] == Transform("extract", (3, r))


def test_malformed_pipeline_rejected():
    text = HEADER + "[identity bad]\nlhs = f1\nrhs = f1\npipeline = extract(3,5)\nwindow = 0 10\n"
    with pytest.raises(CatalogError) as info:
        loads(text)
    assert info.value.record == "bad" and info.value.field == "pipeline"


@pytest.mark.parametrize("body, field", [
    ("[identity x]\nlhs = f1^^2\nrhs = f1\nwindow = 0 10\n", "lhs"),
    ("[identity x]\nlhs = f1\nwindow = 0 10\n", "rhs"),
    ("[identity x]\nlhs = f1\nrhs = f1\nwindow = 5 5\n", "window"),
    ("[identity x]\nlhs = f1\nrhs = f1\nwindow = 0 10\ncolour = red\n", "colour"),
    ("[congruence x]\nseries = f1\nindex_a = 0\nindex_b = 1\nmodulus = 6\nk = 0 0\nn = 0 5\n", "index_a"),
    ("[congruence x]\nseries = f1\nindex_a = 3\nindex_b = 1\nmodulus = 1\nk = 0 0\nn = 0 5\n", "modulus"),
    ("[congruence x]\nseries = f1\nindex_a = 3\nindex_b = (3^k-5)/4\nmodulus = 6\nk = 0 0\nn = 0 5\n",
     "index_b"),
    ("[relation x]\nseries = f1\nterms = 1 0 1\nn = 0 5\n", "terms"),
    ("[congruence x]\nseries = f1\nindex_a = 3\nindex_b = 1\nmodulus = 6\nside = odd\nk = 0 0\nn = 0 5\n",
     "side"),
])
def test_schema_violations_name_record_and_field(body, field):
    with pytest.raises(CatalogError) as info:
        loads(HEADER + body)
    assert info.value.record == "x"
    assert info.value.field == field


def test_parse_error_reports_position():
    with pytest.raises(CatalogError, match="column"):
        loads(HEADER + "[identity x]\nlhs = f1 + (f2\nrhs = f1\nwindow = 0 10\n")


def test_header_and_duplicates():
    with pytest.raises(CatalogError, match="first line"):
        loads("[identity x]\nlhs = f1\nrhs = f1\nwindow = 0 10\n")
    with pytest.raises(CatalogError, match="version"):
        loads("qcore-catalog 2\n")
    rec = "[identity x]\nlhs = f1\nrhs = f1\nwindow = 0 10\n"
    with pytest.raises(CatalogError):
        loads(HEADER + rec + rec.replace("identity x", "relation x"))


def test_roundtrip():
    cat = load()
    again = loads(dumps(cat))
    assert again.records == cat.records
    assert dumps(again) == dumps(cat)


def test_env_override(tmp_path, monkeypatch):
    path = tmp_path / "mini.qcat"
    path.write_text(HEADER + "[identity one]\nlhs = f1/f1\nrhs = 1\nwindow = 0 20\n")
    monkeypatch.setenv("QCORE_CATALOG", str(path))
    assert default_path() == path
    assert load().ids() == ["one"]


def test_unknown_id():
    with pytest.raises(KeyError):
        load().get("no-such")


def test_int_formula():
    f = IntFormula("3*(3^(4*k+4) - 1)/40")
    assert [f(k) for k in range(3)] == [6, 492, 39858]
    with pytest.raises(ValueError):
        IntFormula("__import__('os')")
    with pytest.raises(ValueError):
        IntFormula("(3^k)/2")(1)


def test_pipeline_parsing_and_precision():
    p = parse_pipeline("shift(-3) extract(3,0) substitute(2)")
    assert p == (Transform("shift", (-3,)), Transform("extract", (3, 0)), Transform("substitute", (2,)))
    need = pipeline_source_prec(p, 10)
    out = apply_pipeline(S(range(1, need + 4), -3, need), p)
    assert out.prec >= 10
    assert apply_pipeline(S(range(1, need + 3), -3, need - 1), p).prec < 10
    with pytest.raises(ValueError):
        parse_pipeline("extract(3)")


def test_relation_terms():
    rel = load().get("thm3.6")
    assert rel.terms == ((Fraction(1), 27, 19), (Fraction(-82), 3, 1))
    assert rel.applies(1) and not rel.applies(3)
