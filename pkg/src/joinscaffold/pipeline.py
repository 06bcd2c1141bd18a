"""End-to-end planning loop: decompose, solve, prompt, generate, validate.

One run performs Stage-1 decomposition once, then up to ``max_iterations``
(default 3) rounds of: schema-graph build (honoring accumulated edge
exclusions), Steiner solve, prompt assembly, SQL generation through a
pluggable client, and three-level validation. A level-1 failure returns
immediately with the ``syntax_error`` outcome; level-2/3 failures feed the
re-planning rules; three failed rounds yield ``max_iterations``.

Re-planning rules by violation code:

* MISSING_TERMINAL — terminals unchanged; the table is marked must-include in
  the next prompt's critical requirements.
* UNMAPPED_ATTRIBUTE — the phrase is re-matched against the schema and any
  owning tables join the terminal set.
* IRRELEVANT_JOIN — the offending edge joins a per-run exclusion list consumed
  by the next graph build.
* AGG_MISMATCH / CONSTRAINT_MISMATCH / GROUPBY_RULE — terminals unchanged; the
  violation text is appended to the critical-requirements section.
"""

from __future__ import annotations

import os
import string
import time
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Optional, Protocol, Sequence, Union

import requests

from .canonical import canonical_json
from .costs import CostWeights, DEFAULT_WEIGHTS, build_schema_graph, edge_key
from .decompose import (
    DecompositionResult,
    TerminalSet,
    decompose_question,
    find_containing_tables,
)
from .embedding import EmbeddingProvider, default_provider
from .profiling import StatsProfile, profile_statistics
from .schema import Schema
from .sqlcheck import ValidationReport, validate_all
from .steiner import SteinerScaffold, scaffold_document, solve_steiner

TEMPLATE_NAMES = (
    "role_play",
    "critical_requirements",
    "build_relation",
    "optimal_query_plan",
    "behavioral_guidelines",
)


class PipelineError(RuntimeError):
    """Unrecoverable pipeline failure (configuration, templates, no terminals)."""


class GeneratorError(RuntimeError):
    """Generator client failure after retries."""


@dataclass(frozen=True)
class PipelineConfig:
    weights: CostWeights = DEFAULT_WEIGHTS
    sample_limit: int = 10_000
    max_iterations: int = 3
    temperature: float = 0.0
    generator_endpoint: str = ""
    generator_model: str = ""
    generator_api_key: str = ""
    template_dir: Optional[Path] = None
    profile_stats: bool = True
    retries: int = 3
    backoff: float = 0.5
    timeout: float = 60.0

    @classmethod
    def from_env(cls, **overrides) -> "PipelineConfig":
        env = os.environ
        values = dict(
            generator_endpoint=env.get("JOINSCAFFOLD_GENERATOR_ENDPOINT", ""),
            generator_model=env.get("JOINSCAFFOLD_GENERATOR_MODEL", ""),
            generator_api_key=env.get("JOINSCAFFOLD_GENERATOR_API_KEY", ""),
        )
        values.update(overrides)
        return cls(**values)


class GeneratorClient(Protocol):
    def generate(self, prompt: str, question: str) -> str: ...


class StubGenerator:
    """Deterministic fixture-keyed generator for offline runs and tests.

    Responses come from, in order of precedence: the memo of inputs already
    answered (identical input always gets the identical output back), the
    ``keyed`` mapping by question, the ``responses`` script (consumed one per
    novel input), then ``default``.
    """

    def __init__(
        self,
        responses: Sequence[str] = (),
        keyed: Optional[dict[str, str]] = None,
        default: Optional[str] = None,
    ) -> None:
        self._script = list(responses)
        self._keyed = dict(keyed or {})
        self._default = default
        self._memo: dict[tuple[str, str], str] = {}

    def generate(self, prompt: str, question: str) -> str:
        key = (prompt, question)
        if key in self._memo:
            return self._memo[key]
        if question in self._keyed:
            answer = self._keyed[question]
        elif self._script:
            answer = self._script.pop(0)
        elif self._default is not None:
            answer = self._default
        else:
            raise GeneratorError("stub generator has no response left for this input")
        self._memo[key] = answer
        return answer


class HttpGenerator:
    """Chat-completion client; endpoint/model/key from config or environment."""

    def __init__(self, config: PipelineConfig):
        self.config = config
        if not config.generator_endpoint:
            raise PipelineError(
                "no generator endpoint configured (JOINSCAFFOLD_GENERATOR_ENDPOINT)"
            )

    def generate(self, prompt: str, question: str) -> str:
        payload = {
            "model": self.config.generator_model,
            "messages": [
                {"role": "system", "content": prompt},
                {"role": "user", "content": question},
            ],
            "temperature": self.config.temperature,
        }
        headers = {}
        if self.config.generator_api_key:
            headers["Authorization"] = f"Bearer {self.config.generator_api_key}"
        delay = self.config.backoff
        last_error: Exception | None = None
        for attempt in range(self.config.retries):
            try:
                resp = requests.post(
                    self.config.generator_endpoint,
                    json=payload,
                    headers=headers,
                    timeout=self.config.timeout,
                )
                resp.raise_for_status()
                return resp.json()["choices"][0]["message"]["content"]
            except (requests.RequestException, KeyError, ValueError) as exc:
                last_error = exc
                if attempt + 1 < self.config.retries:
                    time.sleep(delay)
                    delay *= 2
        raise GeneratorError(f"generator failed after {self.config.retries} attempts: {last_error}")


# ---------------------------------------------------------------------------
# Prompt assembly
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PromptBundle:
    role_play: str
    critical_requirements: str
    build_relation: str
    optimal_query_plan: str
    behavioral_guidelines: str
    scaffold_doc: str
    schema_excerpt: str

    def __post_init__(self) -> None:
        for name in TEMPLATE_NAMES:
            if not getattr(self, name).strip():
                raise PipelineError(f"prompt section {name!r} is empty")

    def text(self) -> str:
        sections = [getattr(self, name).strip() for name in TEMPLATE_NAMES]
        return "\n\n".join(sections) + "\n"


def _load_template(name: str, template_dir: Optional[Path]) -> string.Template:
    if template_dir is not None:
        path = Path(template_dir) / f"{name}.txt"
        if not path.is_file():
            raise PipelineError(f"missing template file: {path}")
        return string.Template(path.read_text(encoding="utf-8"))
    ref = resources.files("joinscaffold").joinpath(f"templates/{name}.txt")
    try:
        return string.Template(ref.read_text(encoding="utf-8"))
    except FileNotFoundError as exc:
        raise PipelineError(f"missing template file: {name}.txt") from exc


def _schema_excerpt(schema: Schema, tables: Sequence[str]) -> str:
    lines = []
    in_scope = set(tables)
    for name in tables:
        t = schema.table(name)
        cols = ", ".join(f"{c.name} {c.declared_type}" for c in t.columns)
        lines.append(f"{t.name}({cols})")
    for fk in schema.foreign_keys:
        if fk.from_table in in_scope and fk.to_table in in_scope:
            lines.append(
                f"FK {fk.from_table}.{fk.from_column} -> {fk.to_table}.{fk.to_column}"
            )
    return "\n".join(lines)


def _plan_section(scaffold: SteinerScaffold) -> str:
    lines = [f"tables: {', '.join(scaffold.vertices)}"]
    if scaffold.steiner_vertices:
        lines.append(f"bridge tables: {', '.join(scaffold.steiner_vertices)}")
    for a, b, cost in scaffold.edges:
        lines.append(f"join {a} -- {b} (cost {cost})")
    if not scaffold.edges:
        lines.append("single-table query, no joins required")
    return "\n".join(lines)


def build_prompt(
    scaffold: SteinerScaffold,
    schema: Schema,
    question: str,
    config: PipelineConfig = PipelineConfig(),
    must_include: Sequence[str] = (),
    extra_requirements: Sequence[str] = (),
) -> PromptBundle:
    """Deterministic five-section prompt assembly from template files."""
    if not question or not question.strip():
        raise ValueError("question must be non-empty")
    templates = {name: _load_template(name, config.template_dir) for name in TEMPLATE_NAMES}
    extra_lines = [f"- The table {t!r} is required; include it." for t in must_include]
    extra_lines += [f"- {req}" for req in extra_requirements]
    excerpt = _schema_excerpt(schema, scaffold.vertices)
    bundle = PromptBundle(
        role_play=templates["role_play"].substitute(),
        critical_requirements=templates["critical_requirements"].substitute(
            extra_requirements="\n".join(extra_lines)
        ),
        build_relation=templates["build_relation"].substitute(schema_excerpt=excerpt),
        optimal_query_plan=templates["optimal_query_plan"].substitute(
            plan=_plan_section(scaffold)
        ),
        behavioral_guidelines=templates["behavioral_guidelines"].substitute(),
        scaffold_doc=scaffold_document(scaffold),
        schema_excerpt=excerpt,
    )
    return bundle


# ---------------------------------------------------------------------------
# Re-planning
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ReplanUpdate:
    terminals: TerminalSet
    must_include: tuple[str, ...] = ()
    excluded_edges: tuple[tuple[str, str], ...] = ()
    extra_requirements: tuple[str, ...] = ()


def update_terminals(
    terminals: TerminalSet,
    report: ValidationReport,
    decomposition: DecompositionResult,
    schema: Schema,
    weights: CostWeights = DEFAULT_WEIGHTS,
    provider: Optional[EmbeddingProvider] = None,
) -> ReplanUpdate:
    """Translate level-2/3 violations into terminal and graph constraints."""
    if report.level2 is not False and report.level3 is not False:
        raise ValueError("update_terminals called on a passing report")
    provider = provider or default_provider()
    must_include: list[str] = []
    excluded: list[tuple[str, str]] = []
    extra: list[str] = []
    new_terminals = terminals
    for v in report.violations:
        if v.code == "MISSING_TERMINAL":
            if v.subject not in must_include:
                must_include.append(v.subject)
        elif v.code == "UNMAPPED_ATTRIBUTE":
            found = find_containing_tables([v.subject], schema, weights, provider)
            new_terminals = new_terminals.union(found.tables, "direct-reference")
        elif v.code == "IRRELEVANT_JOIN":
            a, b = v.subject.split("~", 1)
            key = edge_key(a, b)
            if key not in excluded:
                excluded.append(key)
        elif v.code in ("AGG_MISMATCH", "CONSTRAINT_MISMATCH", "GROUPBY_RULE"):
            extra.append(v.message)
    return ReplanUpdate(
        terminals=new_terminals,
        must_include=tuple(must_include),
        excluded_edges=tuple(excluded),
        extra_requirements=tuple(extra),
    )


# ---------------------------------------------------------------------------
# The loop
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class IterationTrace:
    iteration: int
    terminals: TerminalSet
    scaffold: SteinerScaffold
    sql: str
    report: ValidationReport
    excluded_edges: tuple[tuple[str, str], ...] = ()
    must_include: tuple[str, ...] = ()


@dataclass(frozen=True)
class PipelineResult:
    outcome: str  # sql | syntax_error | max_iterations
    sql: Optional[str]
    question: str
    iterations_used: int
    trace: tuple[IterationTrace, ...]
    decomposition: DecompositionResult


def run_pipeline(
    question: str,
    schema: Schema,
    db_path: Union[str, Path, None],
    config: PipelineConfig,
    client: GeneratorClient,
    stats: Optional[StatsProfile] = None,
    provider: Optional[EmbeddingProvider] = None,
) -> PipelineResult:
    """Stage 1 once, then the bounded plan-generate-validate loop."""
    provider = provider or default_provider()
    decomposition = decompose_question(question, schema, config.weights, provider)
    terminals = decomposition.terminals
    if not len(terminals):
        raise PipelineError(
            "no terminal tables identified for this question; nothing to plan"
        )
    if stats is None and config.profile_stats and db_path is not None:
        stats = profile_statistics(schema, db_path, config.sample_limit)

    excluded: tuple[tuple[str, str], ...] = ()
    must_include: tuple[str, ...] = ()
    extra_requirements: tuple[str, ...] = ()
    trace: list[IterationTrace] = []

    for iteration in range(1, config.max_iterations + 1):
        graph = build_schema_graph(
            schema, stats, config.weights, provider, excluded_edges=excluded
        )
        scaffold = solve_steiner(graph, terminals.tables)
        prompt = build_prompt(
            scaffold, schema, question, config, must_include, extra_requirements
        )
        sql = client.generate(prompt.text(), question)
        if db_path is None:
            raise PipelineError("a database path is required for validation")
        report = validate_all(
            sql,
            db_path,
            terminals,
            scaffold,
            decomposition.entities,
            schema,
            config.weights,
            provider,
        )
        trace.append(
            IterationTrace(
                iteration=iteration,
                terminals=terminals,
                scaffold=scaffold,
                sql=sql,
                report=report,
                excluded_edges=excluded,
                must_include=must_include,
            )
        )
        if report.level1 is False:
            return PipelineResult(
                outcome="syntax_error",
                sql=None,
                question=question,
                iterations_used=iteration,
                trace=tuple(trace),
                decomposition=decomposition,
            )
        if report.ok:
            return PipelineResult(
                outcome="sql",
                sql=sql,
                question=question,
                iterations_used=iteration,
                trace=tuple(trace),
                decomposition=decomposition,
            )
        update = update_terminals(
            terminals, report, decomposition, schema, config.weights, provider
        )
        terminals = update.terminals
        must_include = tuple(dict.fromkeys(must_include + update.must_include))
        excluded = tuple(dict.fromkeys(excluded + update.excluded_edges))
        extra_requirements = tuple(
            dict.fromkeys(extra_requirements + update.extra_requirements)
        )

    return PipelineResult(
        outcome="max_iterations",
        sql=None,
        question=question,
        iterations_used=config.max_iterations,
        trace=tuple(trace),
        decomposition=decomposition,
    )


def pipeline_document(result: PipelineResult) -> str:
    """Canonical JSON trace of a pipeline run."""
    import json

    doc = {
        "outcome": result.outcome,
        "sql": result.sql,
        "question": result.question,
        "iterations_used": result.iterations_used,
        "iterations": [
            {
                "iteration": t.iteration,
                "terminals": [
                    {"table": name, "reason": reason}
                    for name, reason in t.terminals.entries
                ],
                "scaffold": json.loads(scaffold_document(t.scaffold)),
                "sql": t.sql,
                "report": {
                    "level1": t.report.level1,
                    "level2": t.report.level2,
                    "level3": t.report.level3,
                    "ok": t.report.ok,
                    "violations": [
                        {
                            "level": v.level,
                            "code": v.code,
                            "message": v.message,
                            "subject": v.subject,
                        }
                        for v in t.report.violations
                    ],
                    "notes": list(t.report.notes),
                },
                "excluded_edges": [list(e) for e in t.excluded_edges],
                "must_include": list(t.must_include),
            }
            for t in result.trace
        ],
    }
    return canonical_json(doc)
