import random
from dataclasses import replace

import pytest

from conftest import load_fixture
from kbmerge import (
    AlignmentError,
    GenerationError,
    Atom,
    AtomOp,
    Constraint,
    Implies,
    InconsistentInputError,
    KnowledgeBase,
    NotContextualizedError,
    ValidationError,
    Variable,
    align,
    brute_force_solutions,
    ckb_merge,
    contextualize,
    count_solutions,
    intersection_count,
    is_redundant,
    parse_kb,
    strip_context,
    synthesize_pair,
)
from kbmerge.synth import SynthConfig

ELECTRO_BODY = Implies(
    Atom("fuel", AtomOp.EQ, "electro"), Atom("couplingdev", AtomOp.EQ, "no")
)


# --- contextualize -----------------------------------------------------------


def test_contextualize_guards_every_constraint(kb_us):
    out = contextualize(kb_us, "country", "US")
    assert out.context == ("country", "US")
    assert len(out.constraints) == 3
    first = out.constraints[0]
    assert first.formula == Implies(
        Atom("country", AtomOp.EQ, "US"), Atom("fuel", AtomOp.NEQ, "hybrid")
    )
    assert all(c.contextualized for c in out.constraints)


def test_contextualize_preserves_solution_space(kb_us):
    out = contextualize(kb_us, "country", "US")
    assert count_solutions(out.variables, out.formulas())[0].count == 288


def test_contextualize_empty_kb():
    kb = parse_kb('kb "t" { var x : { a, b }; }')
    out = contextualize(kb, "market", "EU")
    assert out.constraints == ()
    assert out.context == ("market", "EU")


def test_contextualize_appends_missing_context_variable():
    kb = parse_kb('kb "t" { var x : { a, b }; constraint c: x != a; }')
    out = contextualize(kb, "market", "EU")
    assert out.variables[-1] == Variable("market", ("EU",))
    assert count_solutions(out.variables, out.formulas())[0].count == 1


def test_contextualize_rejects_widened_context_domain():
    kb = parse_kb('kb "t" { var market : { EU, US }; var x : { a }; }')
    with pytest.raises(ValidationError, match="singleton"):
        contextualize(kb, "market", "EU")


def test_contextualize_rejects_inconsistent_kb():
    kb = parse_kb(
        'kb "bad" { var x : { a, b }; constraint c1: x = a;'
        " constraint c2: x != a; }"
    )
    with pytest.raises(InconsistentInputError, match="bad"):
        contextualize(kb, "market", "EU")


# --- align -------------------------------------------------------------------


def test_align_unions_context_domain(car_pair):
    us, ger = car_pair
    variables = align(us, ger, "country")
    assert variables[0] == Variable("country", ("US", "GER"))
    assert variables[1:] == us.variables[1:]


def test_align_reports_missing_variable(car_pair):
    us, ger = car_pair
    shrunk = replace(
        ger, variables=tuple(v for v in ger.variables if v.name != "service")
    )
    with pytest.raises(AlignmentError) as err:
        align(us, shrunk, "country")
    assert err.value.variable == "service"


def test_align_reports_extra_variable(car_pair):
    us, ger = car_pair
    grown = replace(ger, variables=ger.variables + (Variable("extra", ("x",)),))
    with pytest.raises(AlignmentError) as err:
        align(us, grown, "country")
    assert err.value.variable == "extra"


def test_align_reports_domain_mismatch(car_pair):
    us, ger = car_pair
    recolored = replace(
        ger,
        variables=tuple(
            Variable("color", ("white", "black", "red")) if v.name == "color" else v
            for v in ger.variables
        ),
    )
    with pytest.raises(AlignmentError) as err:
        align(us, recolored, "country")
    assert err.value.variable == "color"


def test_align_ignores_domain_value_order(car_pair):
    us, ger = car_pair
    permuted = replace(
        ger,
        variables=tuple(
            Variable("color", ("black", "white")) if v.name == "color" else v
            for v in ger.variables
        ),
    )
    variables = align(us, permuted, "country")
    # first KB's value order wins
    assert dict((v.name, v.domain) for v in variables)["color"] == ("white", "black")


def test_align_requires_context_variable(kb_us, kb_ger):
    stripped = replace(
        kb_us,
        variables=tuple(v for v in kb_us.variables if v.name != "country"),
        context=None,
    )
    with pytest.raises(AlignmentError) as err:
        align(stripped, kb_ger, "country")
    assert err.value.variable == "country"


# --- ckb_merge on the car example ---------------------------------------------


def test_car_merge_structure(car_merged):
    merged, report = car_merged
    assert len(merged.constraints) == 5
    by_id = {c.id: c for c in merged.constraints}
    assert set(by_id) == {"c1us", "c3us", "c1ger", "c2ger", "c3ger"}

    # the shared electro constraint survives exactly once, unguarded
    assert by_id["c2ger"].formula == ELECTRO_BODY

    guards = {
        "c1us": "US",
        "c3us": "US",
        "c1ger": "GER",
        "c3ger": "GER",
    }
    for cid, country in guards.items():
        f = by_id[cid].formula
        assert f.left == Atom("country", AtomOp.EQ, country)

    assert report.checks_phase1 == 6
    assert report.checks_phase2 == 6
    assert report.decontextualized_ids == ("c2us", "c2ger")
    assert report.kept_contextualized_ids == ("c1us", "c3us", "c1ger", "c3ger")
    assert report.removed_redundant_ids == ("c2us",)
    assert report.elapsed_phase1_ms >= 0
    assert report.elapsed_phase2_ms >= 0


def test_car_merge_report_partitions_inputs(car_pair, car_merged):
    us, ger = car_pair
    _, report = car_merged
    input_ids = [c.id for c in us.constraints] + [c.id for c in ger.constraints]
    assert sorted(report.decontextualized_ids + report.kept_contextualized_ids) == sorted(
        input_ids
    )


def test_car_merge_solution_space(car_pair, car_merged):
    us, ger = car_pair
    merged, _ = car_merged
    assert count_solutions(merged.variables, merged.formulas())[0].count == 612
    # each source is evaluated on its own grid, where its context is pinned
    union = brute_force_solutions(
        us.variables, us.formulas()
    ) | brute_force_solutions(ger.variables, ger.formulas())
    assert brute_force_solutions(merged.variables, merged.formulas()) == union


def test_car_merge_is_deterministic(car_pair, car_merged):
    merged, report = car_merged
    again, report2 = ckb_merge(*car_pair)
    assert [c.id for c in again.constraints] == [c.id for c in merged.constraints]
    assert [c.formula for c in again.constraints] == [
        c.formula for c in merged.constraints
    ]
    assert report2.removed_redundant_ids == report.removed_redundant_ids


def test_merged_output_declares_no_single_context(car_merged):
    merged, _ = car_merged
    assert merged.context is None
    assert all(not c.contextualized for c in merged.constraints)


def test_merging_identical_constraint_sets_keeps_one_copy():
    text = 'kb "%s" { context market = %s; var market : { %s };' \
           " var x : { a, b, c }; constraint c1: x != a; }"
    kb1 = contextualize(parse_kb(text % ("left", "L", "L")), "market", "L")
    kb2 = contextualize(parse_kb(text % ("right", "R", "R")), "market", "R")
    merged, report = ckb_merge(kb1, kb2)
    assert len(merged.constraints) == 1
    assert merged.constraints[0].formula == Atom("x", AtomOp.NEQ, "a")
    # duplicate ids got provenance suffixes before merging
    assert report.decontextualized_ids == ("c1.left", "c1.right")
    assert report.removed_redundant_ids == ("c1.left",)
    union = brute_force_solutions(
        kb1.variables, kb1.formulas()
    ) | brute_force_solutions(kb2.variables, kb2.formulas())
    assert brute_force_solutions(merged.variables, merged.formulas()) == union


# --- ckb_merge preconditions ---------------------------------------------------


def test_merge_rejects_uncontextualized_inputs(kb_us, kb_ger):
    with pytest.raises(NotContextualizedError):
        ckb_merge(kb_us, kb_ger)


def test_merge_rejects_same_context_value(kb_us):
    a = contextualize(kb_us, "country", "US")
    with pytest.raises(ValidationError, match="same context value"):
        ckb_merge(a, a)


def test_merge_rejects_unaligned_inputs(car_pair):
    us, ger = car_pair
    shrunk = replace(
        ger,
        variables=tuple(v for v in ger.variables if v.name != "service"),
        constraints=ger.constraints,
    )
    with pytest.raises(AlignmentError):
        ckb_merge(us, shrunk)


def test_merge_rejects_inconsistent_contextualized_input():
    ctx = Atom("country", AtomOp.EQ, "US")
    variables = (Variable("country", ("US",)), Variable("x", ("a", "b")))
    constraints = (
        Constraint("c1", Implies(ctx, Atom("x", AtomOp.EQ, "a")), "bad", True),
        Constraint("c2", Implies(ctx, Atom("x", AtomOp.NEQ, "a")), "bad", True),
    )
    bad = KnowledgeBase("bad", variables, constraints, ("country", "US"))
    aligned_ger = KnowledgeBase(
        "other",
        (Variable("country", ("GER",)), Variable("x", ("a", "b"))),
        (),
        ("country", "GER"),
    )
    with pytest.raises(InconsistentInputError, match="bad"):
        ckb_merge(bad, aligned_ger)


# --- redundancy ---------------------------------------------------------------


def test_duplicate_constraint_is_redundant():
    kb = parse_kb(
        'kb "t" { var x : { a, b }; constraint c1: x = a; constraint c2: x = a; }'
    )
    assert is_redundant(kb, kb.constraints[1])
    assert is_redundant(kb, kb.constraints[0])


def test_lone_constraint_is_not_redundant():
    kb = parse_kb('kb "t" { var x : { a, b }; constraint c1: x = a; }')
    assert not is_redundant(kb, kb.constraints[0])


def test_second_decontextualized_copy_is_redundant(kb_union):
    # the phase-1 picture of the car merge: both electro constraints bare
    constraints = tuple(
        strip_context(replace(c, contextualized=True), "country")
        if c.id in ("c2us", "c2ger")
        else c
        for c in kb_union.constraints
    )
    kb = replace(kb_union, constraints=constraints)
    by_id = {c.id: c for c in kb.constraints}
    assert is_redundant(kb, by_id["c2ger"])
    assert is_redundant(kb, by_id["c2us"])
    assert not is_redundant(kb, by_id["c1us"])


def test_is_redundant_requires_membership(kb_union):
    from kbmerge.errors import ConstraintNotFoundError

    stray = Constraint("zz", Atom("fuel", AtomOp.NEQ, "gas"))
    with pytest.raises(ConstraintNotFoundError):
        is_redundant(kb_union, stray)


# --- intersection -------------------------------------------------------------


def test_car_intersection(kb_us, kb_ger):
    assert intersection_count(kb_us, kb_ger) == 126


def test_car_intersection_on_contextualized_pair(car_pair):
    assert intersection_count(*car_pair) == 126


def test_intersection_with_unconstrained_side(kb_us, kb_ger):
    empty_ger = replace(kb_ger, constraints=())
    assert intersection_count(kb_us, empty_ger) == 288


def test_intersection_rejects_context_variable_mismatch(kb_us, kb_ger):
    from kbmerge import serialize_kb

    renamed = parse_kb(serialize_kb(kb_ger).replace("country", "market"))
    with pytest.raises(AlignmentError):
        intersection_count(kb_us, renamed)


def test_intersection_matches_brute_force_on_random_pairs():
    rng = random.Random(99)
    for _ in range(25):
        seed = rng.randrange(10**6)
        kb1, kb2 = synthesize_pair(
            SynthConfig(
                n_constraints=6,
                context_share=0.5,
                seed=seed,
                n_vars=4,
                domain_size=3,
            )
        )
        shared = tuple(v for v in kb1.variables if v.name != "ctx")
        bodies = kb1.formulas() + kb2.formulas()
        assert intersection_count(kb1, kb2) == len(
            brute_force_solutions(shared, bodies)
        )


# --- semantics preservation on random pairs ------------------------------------


def test_merge_preserves_union_semantics_on_random_pairs():
    rng = random.Random(4242)
    done = 0
    while done < 40:
        seed = rng.randrange(10**9)
        try:
            kb1, kb2 = synthesize_pair(
                SynthConfig(
                    n_constraints=rng.randint(2, 10),
                    context_share=rng.random(),
                    seed=seed,
                    n_vars=rng.randint(2, 5),
                    domain_size=rng.randint(2, 3),
                )
            )
        except GenerationError:
            continue
        kb1c = contextualize(kb1, "ctx", "ctxA")
        kb2c = contextualize(kb2, "ctx", "ctxB")
        merged, report = ckb_merge(kb1c, kb2c)
        assert report.checks_phase1 == len(kb1c.constraints) + len(kb2c.constraints)
        ids = [c.id for c in merged.constraints]
        assert len(ids) == len(set(ids))
        union = brute_force_solutions(
            kb1c.variables, kb1c.formulas()
        ) | brute_force_solutions(kb2c.variables, kb2c.formulas())
        assert brute_force_solutions(merged.variables, merged.formulas()) == union
        for c in merged.constraints:
            assert not is_redundant(merged, c)
        done += 1
