"""Consistency-based merging of contextualized knowledge bases.

The pipeline: each source KB is contextualized (every constraint guarded
by its context atom), the variable sets are aligned, and the two-phase
merge runs. Phase 1 tries to drop each guard: if asserting the negated
bare constraint against everything else is unsatisfiable, the guard is
not needed and the constraint is added decontextualized, otherwise the
guarded form is kept. Phase 2 removes constraints that the rest of the
merged KB already implies. Both phases preserve the union of the two
source solution spaces.
"""
from __future__ import annotations

import re
import time
from dataclasses import dataclass, replace

from .errors import (
    AlignmentError,
    ConstraintNotFoundError,
    InconsistentInputError,
    NotContextualizedError,
    ValidationError,
)
from .model import (
    Atom,
    AtomOp,
    Constraint,
    Formula,
    Implies,
    KnowledgeBase,
    Variable,
    negate,
    strip_context,
    validate_kb,
)
from .solver import count_solutions, is_consistent


@dataclass(frozen=True)
class MergeReport:
    """Accounting for one merge run.

    ``decontextualized_ids`` and ``kept_contextualized_ids`` partition the
    input constraint ids (phase 1); ``removed_redundant_ids`` lists what
    phase 2 deleted. ``checks_phase1`` always equals the total input
    constraint count: decontextualization costs one consistency check per
    constraint.
    """

    decontextualized_ids: tuple[str, ...]
    kept_contextualized_ids: tuple[str, ...]
    removed_redundant_ids: tuple[str, ...]
    checks_phase1: int
    checks_phase2: int
    elapsed_phase1_ms: float
    elapsed_phase2_ms: float


def contextualize(kb: KnowledgeBase, ctx_var: str, ctx_val: str) -> KnowledgeBase:
    """Guard every constraint with ``ctx_var = ctx_val``.

    The context variable must either be declared with the singleton domain
    {ctx_val} or be absent, in which case it is appended with that domain.
    Under a singleton context domain every guard is vacuously true on all
    in-context assignments, so the solution space is unchanged.
    """
    validate_kb(kb)
    table = kb.variables_by_name()
    declared = table.get(ctx_var)
    if declared is not None:
        if declared.domain != (ctx_val,):
            raise ValidationError(
                f"context variable '{ctx_var}' must have the singleton domain "
                f"{{{ctx_val}}} in '{kb.name}', found {{{', '.join(declared.domain)}}}"
            )
        variables = kb.variables
    else:
        variables = kb.variables + (Variable(ctx_var, (ctx_val,)),)

    ok, _ = is_consistent(kb.variables, kb.formulas())
    if not ok:
        raise InconsistentInputError(f"knowledge base '{kb.name}' is inconsistent")

    guard = Atom(ctx_var, AtomOp.EQ, ctx_val)
    constraints = tuple(
        replace(c, formula=Implies(guard, c.formula), contextualized=True)
        for c in kb.constraints
    )
    out = KnowledgeBase(
        name=kb.name,
        variables=variables,
        constraints=constraints,
        context=(ctx_var, ctx_val),
    )
    validate_kb(out)
    return out


def align(
    kb1: KnowledgeBase, kb2: KnowledgeBase, ctx_var: str
) -> tuple[Variable, ...]:
    """Compute the merged variable set of two aligned sources.

    Every non-context variable must exist in both KBs with the same name
    and the same domain as a set; the result keeps kb1's declaration order
    and value order, with the context variable's domain replaced by the
    union of the two context domains (kb1 values first).
    """
    table1 = kb1.variables_by_name()
    table2 = kb2.variables_by_name()
    if ctx_var not in table1 or ctx_var not in table2:
        missing = kb1.name if ctx_var not in table1 else kb2.name
        raise AlignmentError(
            ctx_var, f"context variable not declared in '{missing}'"
        )
    for v in kb1.variables:
        if v.name == ctx_var:
            continue
        other = table2.get(v.name)
        if other is None:
            raise AlignmentError(v.name, f"not declared in '{kb2.name}'")
        if set(other.domain) != set(v.domain):
            raise AlignmentError(
                v.name,
                f"domain mismatch: {{{', '.join(v.domain)}}} in '{kb1.name}' vs "
                f"{{{', '.join(other.domain)}}} in '{kb2.name}'",
            )
    for v in kb2.variables:
        if v.name != ctx_var and v.name not in table1:
            raise AlignmentError(v.name, f"not declared in '{kb1.name}'")

    dom1 = table1[ctx_var].domain
    dom2 = table2[ctx_var].domain
    union = dom1 + tuple(x for x in dom2 if x not in dom1)
    return tuple(
        Variable(ctx_var, union) if v.name == ctx_var else v for v in kb1.variables
    )


_IDENT_SAFE = re.compile(r"[^A-Za-z0-9_.]")


def _rename_clashes(
    kb1: KnowledgeBase, kb2: KnowledgeBase
) -> tuple[list[Constraint], list[Constraint]]:
    # ids shared by both sources get a provenance suffix on each side
    clashes = {c.id for c in kb1.constraints} & {c.id for c in kb2.constraints}

    def rename(kb: KnowledgeBase) -> list[Constraint]:
        out = []
        for c in kb.constraints:
            if c.id in clashes:
                tag = _IDENT_SAFE.sub("_", c.provenance or kb.name)
                c = replace(c, id=f"{c.id}.{tag}")
            out.append(c)
        return out

    return rename(kb1), rename(kb2)


def _require_contextualized(kb: KnowledgeBase) -> tuple[str, str]:
    if kb.context is None:
        raise NotContextualizedError(
            f"knowledge base '{kb.name}' declares no context"
        )
    ctx_var, ctx_val = kb.context
    domain = kb.variables_by_name()[ctx_var].domain
    if domain != (ctx_val,):
        raise NotContextualizedError(
            f"context variable '{ctx_var}' of '{kb.name}' must have the "
            f"singleton domain {{{ctx_val}}}"
        )
    for c in kb.constraints:
        if not c.contextualized:
            raise NotContextualizedError(
                f"constraint '{c.id}' of '{kb.name}' is not contextualized"
            )
    return ctx_var, ctx_val


def ckb_merge(
    kb1c: KnowledgeBase, kb2c: KnowledgeBase
) -> tuple[KnowledgeBase, MergeReport]:
    """Merge two contextualized, individually consistent knowledge bases.

    Phase 1 walks the concatenated input constraints in file order. For
    each guarded c' with bare body c, it checks {not c} against the still
    unprocessed inputs (c' included, exactly as in the two-phase pseudocode)
    plus the output built so far; unsatisfiable means the guard carries no
    information and c joins the output decontextualized, otherwise c' is
    kept guarded. Phase 2 walks the output in insertion order and deletes
    any constraint whose negation is unsatisfiable with the rest; deletions
    are visible to the remaining checks.

    Returns the merged KB over the aligned variables (context domain is the
    union of the two context values) and a MergeReport. The merged KB has
    no single context, so its ``context`` is empty and the contextualized
    flags are cleared; the guards survive inside the formulas.
    """
    validate_kb(kb1c)
    validate_kb(kb2c)
    ctx_var1, ctx_val1 = _require_contextualized(kb1c)
    ctx_var2, ctx_val2 = _require_contextualized(kb2c)
    if ctx_var1 != ctx_var2:
        raise AlignmentError(
            ctx_var1,
            f"context variables differ: '{ctx_var1}' in '{kb1c.name}' vs "
            f"'{ctx_var2}' in '{kb2c.name}'",
        )
    if ctx_val1 == ctx_val2:
        raise ValidationError(
            f"both sources use the same context value '{ctx_val1}'; "
            f"nothing distinguishes them"
        )
    ctx_var = ctx_var1
    variables = align(kb1c, kb2c, ctx_var)

    for kb in (kb1c, kb2c):
        ok, _ = is_consistent(kb.variables, kb.formulas())
        if not ok:
            raise InconsistentInputError(
                f"knowledge base '{kb.name}' is inconsistent"
            )

    renamed1, renamed2 = _rename_clashes(kb1c, kb2c)
    ckb_prime = renamed1 + renamed2

    decontextualized: list[str] = []
    kept_contextualized: list[str] = []
    merged: list[Constraint] = []
    checks1 = 0

    t0 = time.perf_counter()
    for i, guarded in enumerate(ckb_prime):
        bare = strip_context(guarded, ctx_var)
        # the current constraint stays in the unprocessed pool for its own check
        pool = [c.formula for c in ckb_prime[i:]]
        pool += [c.formula for c in merged]
        pool.append(negate(bare.formula))
        ok, _ = is_consistent(variables, pool)
        checks1 += 1
        if not ok:
            merged.append(bare)
            decontextualized.append(bare.id)
        else:
            merged.append(replace(guarded, contextualized=False))
            kept_contextualized.append(guarded.id)
    t1 = time.perf_counter()

    kept = list(merged)
    removed: list[str] = []
    checks2 = 0
    for c in merged:
        rest = [x.formula for x in kept if x is not c]
        ok, _ = is_consistent(variables, rest + [negate(c.formula)])
        checks2 += 1
        if not ok:
            kept = [x for x in kept if x is not c]
            removed.append(c.id)
    t2 = time.perf_counter()

    out = KnowledgeBase(
        name=f"{kb1c.name}+{kb2c.name}",
        variables=variables,
        constraints=tuple(kept),
        context=None,
    )
    validate_kb(out)
    report = MergeReport(
        decontextualized_ids=tuple(decontextualized),
        kept_contextualized_ids=tuple(kept_contextualized),
        removed_redundant_ids=tuple(removed),
        checks_phase1=checks1,
        checks_phase2=checks2,
        elapsed_phase1_ms=(t1 - t0) * 1000.0,
        elapsed_phase2_ms=(t2 - t1) * 1000.0,
    )
    return out, report


def is_redundant(kb: KnowledgeBase, c: Constraint) -> bool:
    """True iff the rest of the KB is inconsistent with the negation of c."""
    if c not in kb.constraints:
        raise ConstraintNotFoundError(
            f"constraint '{c.id}' is not part of '{kb.name}'"
        )
    removed = False
    rest: list[Formula] = []
    for x in kb.constraints:
        if not removed and x == c:
            removed = True
            continue
        rest.append(x.formula)
    ok, _ = is_consistent(kb.variables, rest + [negate(c.formula)])
    return not ok


def _constraint_bodies(kb: KnowledgeBase) -> list[Formula]:
    if kb.context is None:
        return kb.formulas()
    ctx_var = kb.context[0]
    out = []
    for c in kb.constraints:
        if c.contextualized:
            out.append(strip_context(c, ctx_var).formula)
        else:
            out.append(c.formula)
    return out


def intersection_count(kb1: KnowledgeBase, kb2: KnowledgeBase) -> int:
    """Count assignments of the shared non-context variables satisfying
    both KBs' bare constraint bodies.

    The context variable is projected away: the per-source context domains
    are disjoint, so a literal solution-set intersection would always be
    empty. With guards stripped, the count measures how much of the two
    solution spaces genuinely overlaps.
    """
    validate_kb(kb1)
    validate_kb(kb2)
    ctx1 = kb1.context[0] if kb1.context else None
    ctx2 = kb2.context[0] if kb2.context else None
    if ctx1 and ctx2 and ctx1 != ctx2:
        raise AlignmentError(
            ctx1, f"context variables differ: '{ctx1}' vs '{ctx2}'"
        )
    ctx_var = ctx1 or ctx2

    if ctx_var is not None:
        # tolerate the context variable missing from the uncontextualized side
        if all(ctx_var in kb.variables_by_name() for kb in (kb1, kb2)):
            align(kb1, kb2, ctx_var)
        shared = [v for v in kb1.variables if v.name != ctx_var]
    else:
        shared = list(kb1.variables)
    table1 = kb1.variables_by_name()
    table2 = kb2.variables_by_name()
    for v in shared:
        other = table2.get(v.name)
        if other is None:
            raise AlignmentError(v.name, f"not declared in '{kb2.name}'")
        if set(other.domain) != set(v.domain):
            raise AlignmentError(
                v.name,
                f"domain mismatch: {{{', '.join(v.domain)}}} vs "
                f"{{{', '.join(other.domain)}}}",
            )
    for v in kb2.variables:
        if v.name != ctx_var and v.name not in table1:
            raise AlignmentError(v.name, f"not declared in '{kb1.name}'")

    bodies = _constraint_bodies(kb1) + _constraint_bodies(kb2)
    result, _ = count_solutions(tuple(shared), bodies)
    return result.count
