"""Session and iteration state machine: augment, dual-branch candidate
synthesis, gating, multi-view scoring, clustering and keyword statistics,
layout computation, persistence, and deterministic replay.

One writer per session (a per-session lock serializes commands); candidate
scoring within an iteration runs in parallel and reduces deterministically
by candidate id.
"""

from __future__ import annotations

import hashlib
import json
import logging
import statistics
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import judge as judge_mod
from . import layout as layout_mod
from . import promptlab
from .config import HIGH_LEVEL_DIMENSIONS, SCORE_DIMENSIONS, EngineConfig, engine_config_from_dict
from .errors import (
    ConfigError,
    EngineError,
    NoScoredCandidates,
    NotReady,
    CandidateNotFound,
    IterationNotFound,
    SessionNotFound,
    StoreCorrupt,
    Unscorable,
    VersionMismatch,
)
from .imaging import RasterImage
from .judge import JudgeTemplate, VerdictCache
from .providers.base import GenerationResult
from .providers.factory import ProviderSet, build_providers, providers_config_hash
from .providers.mock import stable_hash
from .scoring import (
    DimensionScore,
    MultiViewSet,
    ScoreVector,
    analyze_views,
    assemble_score_vector,
    clip_i,
    clip_score,
    defect_heatmap,
    three_d_friendly,
    view_consistency,
)

logger = logging.getLogger(__name__)

SESSION_SCHEMA = "session/1"
REPORT_SCHEMA = "report/1"

STATUS_ORDER = ("pending", "generating", "scoring", "ready", "failed")


def canonical_json(doc) -> str:
    return json.dumps(doc, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


@dataclass
class Candidate:
    id: str
    prompt: promptlab.PromptRecord
    branch: str
    view_hashes: list[str]
    view_size: tuple[int, int]
    mesh_ref: str | None = None
    fuse_cosine: float | None = None
    gate: dict | None = None
    grayed: bool = False
    unscorable: str | None = None
    score_vector: dict | None = None
    clip_i_per_view: list[float] | None = None
    per_view_plausibility: list[float | None] | None = None
    defect_map: dict | None = None
    satellite: dict | None = None
    score_series: dict | None = None
    verdicts: dict | None = None

    def to_doc(self) -> dict:
        return {
            "id": self.id,
            "prompt": self.prompt.to_dict(),
            "branch": self.branch,
            "views": self.view_hashes,
            "view_size": list(self.view_size),
            "mesh_ref": self.mesh_ref,
            "fuse_cosine": self.fuse_cosine,
            "gate": self.gate,
            "grayed": self.grayed,
            "unscorable": self.unscorable,
            "score_vector": self.score_vector,
            "clip_i_per_view": self.clip_i_per_view,
            "per_view_plausibility": self.per_view_plausibility,
            "defect_map": self.defect_map,
            "satellite": self.satellite,
            "score_series": self.score_series,
            "verdicts": self.verdicts,
        }

    @classmethod
    def from_doc(cls, doc: dict) -> "Candidate":
        prompt = promptlab.PromptRecord(
            id=doc["prompt"]["id"],
            text=doc["prompt"]["text"],
            parent_id=doc["prompt"]["parent_id"],
            source=doc["prompt"]["source"],
            drift=doc["prompt"]["drift"],
        )
        return cls(
            id=doc["id"],
            prompt=prompt,
            branch=doc["branch"],
            view_hashes=list(doc["views"]),
            view_size=tuple(doc["view_size"]),
            mesh_ref=doc["mesh_ref"],
            fuse_cosine=doc["fuse_cosine"],
            gate=doc["gate"],
            grayed=doc["grayed"],
            unscorable=doc["unscorable"],
            score_vector=doc["score_vector"],
            clip_i_per_view=doc["clip_i_per_view"],
            per_view_plausibility=doc["per_view_plausibility"],
            defect_map=doc["defect_map"],
            satellite=doc["satellite"],
            score_series=doc["score_series"],
            verdicts=doc["verdicts"],
        )


@dataclass
class Iteration:
    index: int
    root_prompt: promptlab.PromptRecord
    options: dict
    status: str = "pending"
    augmented: list[promptlab.PromptRecord] = field(default_factory=list)
    candidates: list[Candidate] = field(default_factory=list)
    cluster: dict | None = None
    keyword_stats: list[dict] = field(default_factory=list)
    treemap: dict | None = None
    diagnostics: dict = field(default_factory=dict)

    def advance(self, status: str) -> None:
        if STATUS_ORDER.index(status) < STATUS_ORDER.index(self.status):
            raise EngineError(f"status cannot move backward: {self.status} -> {status}")
        self.status = status

    def to_doc(self) -> dict:
        return {
            "index": self.index,
            "root_prompt": self.root_prompt.to_dict(),
            "options": self.options,
            "status": self.status,
            "augmented": [p.to_dict() for p in self.augmented],
            "candidates": [c.to_doc() for c in self.candidates],
            "cluster": self.cluster,
            "keyword_stats": self.keyword_stats,
            "treemap": self.treemap,
            "diagnostics": self.diagnostics,
        }

    @classmethod
    def from_doc(cls, doc: dict) -> "Iteration":
        def record(p):
            return promptlab.PromptRecord(
                id=p["id"], text=p["text"], parent_id=p["parent_id"], source=p["source"], drift=p["drift"]
            )

        it = cls(index=doc["index"], root_prompt=record(doc["root_prompt"]), options=dict(doc["options"]))
        it.status = doc["status"]
        it.augmented = [record(p) for p in doc["augmented"]]
        it.candidates = [Candidate.from_doc(c) for c in doc["candidates"]]
        it.cluster = doc["cluster"]
        it.keyword_stats = list(doc["keyword_stats"])
        it.treemap = doc["treemap"]
        it.diagnostics = dict(doc["diagnostics"])
        return it


@dataclass
class Session:
    id: str
    seed: int
    engine_config_raw: dict
    providers_config_raw: dict
    provider_config_hash: str
    corpus_hash: str
    stopwords_hash: str
    current_prompt: str | None = None
    current_selection: str | None = None
    prompt_lineage: list[dict] = field(default_factory=list)
    iterations: list[Iteration] = field(default_factory=list)

    def to_doc(self) -> dict:
        return {
            "schema": SESSION_SCHEMA,
            "id": self.id,
            "seed": self.seed,
            "engine_config": self.engine_config_raw,
            "providers_config": self.providers_config_raw,
            "provider_config_hash": self.provider_config_hash,
            "corpus_hash": self.corpus_hash,
            "stopwords_hash": self.stopwords_hash,
            "current_prompt": self.current_prompt,
            "current_selection": self.current_selection,
            "prompt_lineage": self.prompt_lineage,
            "iterations": [it.to_doc() for it in self.iterations],
        }

    @classmethod
    def from_doc(cls, doc: dict) -> "Session":
        schema = doc.get("schema")
        if schema != SESSION_SCHEMA:
            raise VersionMismatch(f"unsupported session schema {schema!r}; this build reads {SESSION_SCHEMA}")
        session = cls(
            id=doc["id"],
            seed=doc["seed"],
            engine_config_raw=dict(doc["engine_config"]),
            providers_config_raw=dict(doc["providers_config"]),
            provider_config_hash=doc["provider_config_hash"],
            corpus_hash=doc["corpus_hash"],
            stopwords_hash=doc["stopwords_hash"],
            current_prompt=doc["current_prompt"],
            current_selection=doc["current_selection"],
            prompt_lineage=list(doc["prompt_lineage"]),
        )
        session.iterations = [Iteration.from_doc(d) for d in doc["iterations"]]
        return session


class SessionStore:
    """One JSON document per session plus content-addressed PNG blobs.

    Layout: store/sessions/<id>.json, store/blobs/<sha256>.png
    """

    def __init__(self, root: Path | str):
        self.root = Path(root)
        (self.root / "sessions").mkdir(parents=True, exist_ok=True)
        (self.root / "blobs").mkdir(parents=True, exist_ok=True)

    def session_ids(self) -> list[str]:
        return sorted(p.stem for p in (self.root / "sessions").glob("*.json"))

    def persist(self, session: Session) -> None:
        path = self.root / "sessions" / f"{session.id}.json"
        path.write_text(canonical_json(session.to_doc()) + "\n", encoding="utf-8")

    def load(self, session_id: str) -> Session:
        path = self.root / "sessions" / f"{session_id}.json"
        if not path.exists():
            raise SessionNotFound(f"session {session_id!r} not found")
        try:
            doc = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise StoreCorrupt(f"cannot parse session file: {exc}", location=str(path)) from exc
        return Session.from_doc(doc)

    def put_blob(self, img: RasterImage) -> str:
        data = img.to_png_bytes()
        digest = hashlib.sha256(data).hexdigest()
        path = self.root / "blobs" / f"{digest}.png"
        if not path.exists():
            path.write_bytes(data)
        return digest

    def get_blob(self, digest: str) -> RasterImage:
        return RasterImage.from_bytes(self.blob_bytes(digest))

    def blob_bytes(self, digest: str) -> bytes:
        path = self.root / "blobs" / f"{digest}.png"
        if not path.exists():
            raise CandidateNotFound(f"blob {digest} missing from store")
        return path.read_bytes()

    def cache_dir(self) -> Path:
        return self.root / "cache"


def _mean_or_none(values: list[float]) -> float | None:
    return statistics.fmean(values) if values else None


@dataclass
class CandidateEvaluation:
    gate: dict | None = None
    grayed: bool = False
    unscorable: str | None = None
    score_vector: dict | None = None
    clip_i_per_view: list[float] | None = None
    per_view_plausibility: list[float | None] | None = None
    defect_map: dict | None = None
    satellite: dict | None = None
    score_series: dict | None = None
    verdicts: dict | None = None


def _per_view_from_verdicts(verdicts, metric: str) -> dict[int, float]:
    """A view's score is the mean of the pair verdicts touching it."""
    out: dict[int, float] = {}
    for view_idx in range(9):
        touching = [v.normalized for v in verdicts.get(metric, ()) if v.pair_index in (view_idx - 1, view_idx)]
        if touching:
            out[view_idx] = statistics.fmean(touching)
    return out


def evaluate_candidate(
    mv: MultiViewSet,
    prompt_text: str,
    providers: ProviderSet,
    config: EngineConfig,
    cache: VerdictCache | None = None,
) -> CandidateEvaluation:
    """Full per-candidate scoring: gate, low-level metrics, judge metrics,
    defect heatmap, satellite and line-chart geometry."""
    ev = CandidateEvaluation()
    views = mv.views
    try:
        gate = three_d_friendly(views[0], providers.segmentation, config)
        ev.gate = gate.to_dict()
        ev.grayed = gate.total < config.gate_threshold
    except Unscorable as exc:
        ev.unscorable = str(exc)
        ev.grayed = True

    try:
        analysis = analyze_views(mv, config)
    except Unscorable as exc:
        ev.unscorable = str(exc)
        ev.satellite = layout_mod.satellite([None] * 9, config.satellite_r_min, config.satellite_r_max).to_dict()
        return ev

    lowlevel: dict[str, DimensionScore | None] = {}
    color = view_consistency(mv, "color", analysis)
    light = view_consistency(mv, "light", analysis)
    lowlevel["color_consistency"] = DimensionScore(value=color, raw=color, provenance="computed")
    lowlevel["light_consistency"] = DimensionScore(value=light, raw=light, provenance="computed")
    clip = clip_score(prompt_text, views[0], providers.embedding)
    lowlevel["clip_score"] = DimensionScore(value=clip.value, raw=clip.raw, provenance="computed")
    ci = clip_i(mv, providers.embedding)
    lowlevel["clip_i"] = DimensionScore(value=ci.aggregate, raw=ci.aggregate_min, provenance="computed")
    ev.clip_i_per_view = list(ci.per_view)

    judge_result = judge_mod.judge_candidate(mv, prompt_text, providers.judge, JudgeTemplate(), config, cache)
    vector = assemble_score_vector(lowlevel, judge_result.scores)
    ev.score_vector = vector.to_dict()
    ev.verdicts = {metric: [v.to_dict() for v in vs] for metric, vs in judge_result.verdicts.items()}

    dm = defect_heatmap(mv, analysis, judge_result.regions_by_view or None, config)
    ev.defect_map = dm.to_dict()

    plaus_map = _per_view_from_verdicts(judge_result.verdicts, "plausibility_3d")
    plaus: list[float | None] = [plaus_map.get(i) for i in range(9)]
    ev.per_view_plausibility = plaus
    ev.satellite = layout_mod.satellite(plaus, config.satellite_r_min, config.satellite_r_max).to_dict()

    per_view: dict[str, dict[int, float]] = {"clip_i": {j + 1: v for j, v in enumerate(ci.per_view)}}
    for metric in HIGH_LEVEL_DIMENSIONS:
        by_view = _per_view_from_verdicts(judge_result.verdicts, metric)
        if by_view:
            per_view[metric] = by_view
    model_level = {dim: vector.value(dim) for dim in SCORE_DIMENSIONS}
    ev.score_series = layout_mod.score_series(model_level, per_view).to_dict()
    return ev


class Engine:
    """Drives the explore-score-refine loop over a session store."""

    def __init__(self, store: SessionStore):
        self.store = store
        self._sessions: dict[str, Session] = {}
        self._locks: dict[str, threading.RLock] = {}
        self._providers: dict[str, ProviderSet] = {}
        self._view_cache: dict[str, list[RasterImage]] = {}
        self._registry_lock = threading.Lock()

    # -- session lifecycle -------------------------------------------------

    def create_session(
        self,
        seed: int,
        providers_config: dict | None = None,
        engine_config: dict | None = None,
    ) -> Session:
        providers_config = providers_config or {}
        engine_config = engine_config or {}
        engine_config_from_dict(engine_config)  # validate early
        corpus = promptlab.load_corpus()
        stopwords = promptlab.load_stopwords()
        with self._registry_lock:
            existing = len(self.store.session_ids())
            session_id = f"s{stable_hash(seed, existing, 'session'):012x}"[:13]
            session = Session(
                id=session_id,
                seed=seed,
                engine_config_raw=engine_config,
                providers_config_raw=providers_config,
                provider_config_hash=providers_config_hash(providers_config),
                corpus_hash=corpus.content_hash,
                stopwords_hash=stopwords.content_hash,
            )
            self._sessions[session_id] = session
            self._locks[session_id] = threading.RLock()
            self.store.persist(session)
        return session

    def get_session(self, session_id: str) -> Session:
        with self._registry_lock:
            if session_id not in self._sessions:
                self._sessions[session_id] = self.store.load(session_id)
                self._locks.setdefault(session_id, threading.RLock())
            return self._sessions[session_id]

    def session_lock(self, session_id: str) -> threading.RLock:
        self.get_session(session_id)
        return self._locks[session_id]

    def _providers_for(self, session: Session) -> ProviderSet:
        if session.id not in self._providers:
            self._providers[session.id] = build_providers(session.providers_config_raw, seed=session.seed)
        return self._providers[session.id]

    def _config_for(self, session: Session) -> EngineConfig:
        return engine_config_from_dict(session.engine_config_raw)

    # -- iteration pipeline ------------------------------------------------

    def run_iteration(
        self,
        session_id: str,
        prompt_text: str,
        n: int | None = None,
        branches: list[str] | None = None,
        prompt_source: str = "user",
        iteration: Iteration | None = None,
    ) -> Iteration:
        """Execute one full explore-score-refine pass.

        When `iteration` is given it was pre-registered (async API) and is
        filled in place; otherwise a new one is appended.
        """
        session = self.get_session(session_id)
        with self.session_lock(session_id):
            if iteration is None:
                iteration = self.begin_iteration(session_id, prompt_text, n=n, branches=branches, prompt_source=prompt_source)
            return self._execute_iteration(session, iteration)

    def begin_iteration(
        self,
        session_id: str,
        prompt_text: str,
        n: int | None = None,
        branches: list[str] | None = None,
        prompt_source: str = "user",
    ) -> Iteration:
        """Register a pending iteration (the async entry point)."""
        session = self.get_session(session_id)
        config = self._config_for(session)
        with self.session_lock(session_id):
            k = len(session.iterations) + 1
            branches = sorted(set(branches if branches is not None else ["generation", "retrieval"]))
            unknown = set(branches) - {"generation", "retrieval"}
            if unknown:
                raise ConfigError(f"unknown branches: {sorted(unknown)}")
            if not branches:
                raise ConfigError("at least one branch must be enabled")
            parent = session.prompt_lineage[-1]["id"] if session.prompt_lineage else None
            root = promptlab.PromptRecord(
                id=f"it{k:02d}-root", text=prompt_text, parent_id=parent, source=prompt_source
            )
            iteration = Iteration(
                index=k,
                root_prompt=root,
                options={"n": n if n is not None else config.augment_count, "branches": branches},
            )
            session.iterations.append(iteration)
            session.prompt_lineage.append(root.to_dict())
            session.current_prompt = prompt_text
            self.store.persist(session)
            return iteration

    def _execute_iteration(self, session: Session, iteration: Iteration) -> Iteration:
        config = self._config_for(session)
        providers = self._providers_for(session)
        k = iteration.index
        n = iteration.options["n"]
        branches = iteration.options["branches"]

        try:
            iteration.advance("generating")
            corpus = promptlab.load_corpus()
            augment_seed = stable_hash(session.seed, k, "augment")
            iteration.augmented = promptlab.augment(
                iteration.root_prompt,
                providers.llm,
                corpus,
                n=n,
                seed=augment_seed,
                id_prefix=f"it{k:02d}-p",
                config=config,
            )

            results = self._run_branches(session, iteration, providers, branches, n)
            if not results:
                iteration.advance("failed")
                iteration.diagnostics["branches"] = "no branch produced candidates"
                self.store.persist(session)
                return iteration

            self._register_candidates(session, iteration, results)
            self._fuse(session, iteration, providers)

            iteration.advance("scoring")
            self._score_candidates(session, iteration, providers, config)
            self._keyword_stage(session, iteration, providers, config)

            iteration.advance("ready")
        except EngineError as exc:
            logger.exception("iteration %d failed", k)
            iteration.diagnostics["error"] = {"code": exc.code, "message": str(exc), "stage": exc.stage}
            iteration.advance("failed")
        self.store.persist(session)
        return iteration

    def _run_branches(
        self,
        session: Session,
        iteration: Iteration,
        providers: ProviderSet,
        branches: list[str],
        n: int,
    ) -> dict[str, list[GenerationResult]]:
        results: dict[str, list[GenerationResult]] = {}
        diagnostics = iteration.diagnostics

        def run_generation():
            out = []
            for i, record in enumerate(iteration.augmented):
                seed = stable_hash(session.seed, iteration.index, "generate", i)
                out.append(providers.generation.generate(record.text, seed=seed))
            return out

        def run_retrieval():
            return providers.retrieval.retrieve(iteration.root_prompt.text, k=n)

        tasks = {}
        with ThreadPoolExecutor(max_workers=2) as pool:
            if "generation" in branches and providers.generation is not None:
                tasks["generation"] = pool.submit(run_generation)
            if "retrieval" in branches and providers.retrieval is not None:
                tasks["retrieval"] = pool.submit(run_retrieval)
            for name, future in tasks.items():
                try:
                    results[name] = future.result()
                except Exception as exc:  # branch failure degrades, never crashes
                    diagnostics[f"{name}_branch"] = str(exc)
                    results[name] = []
        return {k: v for k, v in results.items() if v}

    def _register_candidates(
        self,
        session: Session,
        iteration: Iteration,
        results: dict[str, list[GenerationResult]],
    ) -> None:
        """Interleave branch outputs and assign sequential candidate ids."""
        queues = [results[name] for name in ("generation", "retrieval") if name in results]
        interleaved: list[GenerationResult] = []
        idx = 0
        while any(queues):
            for q in queues:
                if q:
                    interleaved.append(q.pop(0))
            idx += 1
        augmented_by_text = {p.text: p for p in iteration.augmented}
        for seq, result in enumerate(interleaved):
            cid = f"{session.id}-i{iteration.index:02d}-c{seq:03d}"
            prompt = augmented_by_text.get(result.prompt)
            if prompt is None:
                prompt = promptlab.PromptRecord(
                    id=f"it{iteration.index:02d}-r{seq:03d}",
                    text=result.prompt,
                    parent_id=iteration.root_prompt.id,
                    source="augmented" if result.branch == "generation" else "user",
                )
            hashes = [self.store.put_blob(v) for v in result.views]
            self._view_cache[cid] = list(result.views)
            iteration.candidates.append(
                Candidate(
                    id=cid,
                    prompt=prompt,
                    branch=result.branch,
                    view_hashes=hashes,
                    view_size=(result.views[0].width, result.views[0].height),
                    mesh_ref=result.mesh_ref,
                )
            )

    def _fuse(self, session: Session, iteration: Iteration, providers: ProviderSet) -> None:
        """Order the unified gallery by front-view-to-prompt cosine."""
        try:
            prompt_vec = np.asarray(providers.embedding.embed_text(iteration.root_prompt.text), dtype=np.float64)
            for candidate in iteration.candidates:
                front = self.candidate_views(candidate)[0]
                vec = np.asarray(providers.embedding.embed_image(front), dtype=np.float64)
                denom = np.linalg.norm(prompt_vec) * np.linalg.norm(vec)
                candidate.fuse_cosine = float(np.dot(prompt_vec, vec) / denom) if denom > 0 else 0.0
            iteration.candidates.sort(key=lambda c: (-(c.fuse_cosine or 0.0), c.id))
        except Exception as exc:
            iteration.diagnostics["fusion"] = f"embedding failure, insertion order kept: {exc}"

    def _score_candidates(
        self,
        session: Session,
        iteration: Iteration,
        providers: ProviderSet,
        config: EngineConfig,
    ) -> None:
        cache = VerdictCache(self.store.cache_dir())

        def score_one(candidate: Candidate) -> None:
            views = self.candidate_views(candidate)
            mv = MultiViewSet(candidate.id, tuple(views))
            ev = evaluate_candidate(mv, candidate.prompt.text, providers, config, cache)
            candidate.gate = ev.gate
            candidate.grayed = ev.grayed
            candidate.unscorable = ev.unscorable
            candidate.score_vector = ev.score_vector
            candidate.clip_i_per_view = ev.clip_i_per_view
            candidate.per_view_plausibility = ev.per_view_plausibility
            candidate.defect_map = ev.defect_map
            candidate.satellite = ev.satellite
            candidate.score_series = ev.score_series
            candidate.verdicts = ev.verdicts

        # numpy releases the GIL only in short bursts here; two workers
        # measure faster than four on this mostly-Python pipeline
        with ThreadPoolExecutor(max_workers=2) as pool:
            list(pool.map(score_one, iteration.candidates))

    def _keyword_stage(
        self,
        session: Session,
        iteration: Iteration,
        providers: ProviderSet,
        config: EngineConfig,
    ) -> None:
        stopwords = promptlab.load_stopwords()
        prompts = list(iteration.augmented)
        if len(prompts) < 2:
            iteration.diagnostics["keywords"] = "not enough prompts to cluster"
            return
        try:
            points = promptlab.project_2d(prompts, providers.embedding)
            cluster_result = promptlab.cluster(points, config)
        except EngineError as exc:
            iteration.diagnostics["keywords"] = f"clustering skipped: {exc}"
            return

        scored_prompts = [
            promptlab.ScoredPrompt(
                candidate_id=c.id,
                tokens=frozenset(promptlab.tokenize(c.prompt.text)),
                scores=self._vector_from_doc(c.score_vector),
            )
            for c in iteration.candidates
            if c.score_vector is not None
        ]
        stats = promptlab.build_keyword_stats(cluster_result, prompts, scored_prompts, stopwords, config)
        iteration.cluster = cluster_result.to_dict()
        iteration.keyword_stats = [s.to_dict() for s in stats]
        iteration.treemap = self._treemap_doc(stats, cluster_result, config)

    @staticmethod
    def _vector_from_doc(doc: dict) -> ScoreVector:
        scores: dict[str, DimensionScore | None] = {}
        for dim in SCORE_DIMENSIONS:
            entry = doc[dim]
            if entry["value"] is None:
                scores[dim] = None
            else:
                scores[dim] = DimensionScore(
                    value=entry["value"], raw=entry["raw"], provenance=entry["provenance"]
                )
        return ScoreVector(scores)

    @staticmethod
    def _treemap_doc(stats, cluster_result, config, canvas_w=880.0, canvas_h=320.0) -> dict:
        sections: dict[str, dict[int, list[tuple[str, int]]]] = {}
        for stat in stats:
            if stat.section is None:
                continue
            sections.setdefault(stat.section, {}).setdefault(stat.cluster_id, []).append(
                (stat.keyword, stat.frequency)
            )
        spec_map = {}
        for dim, clusters in sections.items():
            specs = []
            for cluster_id in sorted(clusters):
                weight = cluster_result.sizes.get(cluster_id, 1)
                specs.append(
                    layout_mod.ClusterSpec(
                        cluster_id=cluster_id, weight=float(weight), keywords=tuple(clusters[cluster_id])
                    )
                )
            spec_map[dim] = specs
        return layout_mod.treemap(spec_map, canvas_w, canvas_h).to_dict()

    # -- candidate access ---------------------------------------------------

    def candidate_views(self, candidate: Candidate) -> list[RasterImage]:
        if candidate.id not in self._view_cache:
            self._view_cache[candidate.id] = [self.store.get_blob(h) for h in candidate.view_hashes]
        return self._view_cache[candidate.id]

    def find_candidate(self, candidate_id: str) -> tuple[Session, Iteration, Candidate]:
        session_id = candidate_id.split("-i")[0]
        try:
            session = self.get_session(session_id)
        except SessionNotFound as exc:
            raise CandidateNotFound(f"candidate {candidate_id!r} not found") from exc
        for iteration in session.iterations:
            for candidate in iteration.candidates:
                if candidate.id == candidate_id:
                    return session, iteration, candidate
        raise CandidateNotFound(f"candidate {candidate_id!r} not found")

    def get_iteration(self, session_id: str, index: int) -> Iteration:
        session = self.get_session(session_id)
        for iteration in session.iterations:
            if iteration.index == index:
                return iteration
        raise IterationNotFound(f"iteration {index} not found in session {session_id}")

    # -- refinement ----------------------------------------------------------

    def apply_keyword(self, session_id: str, keywords: list[str]) -> str:
        """Merge keywords into the current prompt, recording lineage.

        Keywords already present (token membership) are skipped with a
        warning; appending preserves selection order.
        """
        if not keywords:
            raise ConfigError("keywords must be non-empty")
        session = self.get_session(session_id)
        with self.session_lock(session_id):
            current = session.current_prompt
            if current is None:
                raise NoScoredCandidates("session has no prompt yet; run an iteration first")
            tokens = set(promptlab.tokenize(current))
            added = []
            for kw in keywords:
                kw_tokens = promptlab.tokenize(kw)
                if all(t in tokens for t in kw_tokens):
                    logger.warning("keyword %r already in prompt; skipped", kw)
                    continue
                added.append(kw)
                tokens.update(kw_tokens)
            if not added:
                return current
            new_prompt = current + ", " + ", ".join(added)
            parent = session.prompt_lineage[-1]["id"] if session.prompt_lineage else None
            record = promptlab.PromptRecord(
                id=f"merge{len(session.prompt_lineage):02d}",
                text=new_prompt,
                parent_id=parent,
                source="keyword-merge",
            )
            session.prompt_lineage.append(record.to_dict())
            session.current_prompt = new_prompt
            self.store.persist(session)
            return new_prompt

    def recommendations(self, session_id: str, focus: list[str] | None) -> list[dict]:
        session = self.get_session(session_id)
        ready = [it for it in session.iterations if it.status == "ready" and it.keyword_stats]
        if not ready:
            raise NoScoredCandidates("no scored iteration in session")
        latest = ready[-1]
        stats = [
            promptlab.KeywordStat(
                keyword=s["keyword"],
                frequency=s["frequency"],
                cluster_id=s["cluster_id"],
                mean_scores=s["mean_scores"],
                section=s["section"],
            )
            for s in latest.keyword_stats
        ]
        ranked = promptlab.recommend(stats, focus, session.current_prompt or "")
        return [s.to_dict() for s in ranked]

    def contribution(self, candidate_id: str, keyword: str, threshold: float = 0.0) -> dict:
        session, iteration, candidate = self.find_candidate(candidate_id)
        providers = self._providers_for(session)
        views = self.candidate_views(candidate)
        mv = MultiViewSet(candidate.id, tuple(views))
        analysis = analyze_views(mv)
        links = promptlab.contribution(keyword, mv, list(analysis.masks), providers.attention)
        return layout_mod.sankey([(l.keyword, l.view_index, l.weight) for l in links], threshold).to_dict()

    # -- export and replay ----------------------------------------------------

    def export_report(
        self,
        session_id: str,
        iteration_index: int,
        reference_scores: dict[str, float] | None = None,
    ) -> dict:
        """Self-contained score report for one ready iteration.

        reference_scores maps candidate id to an external reference score;
        when present a Bland-Altman comparison against the mean of present
        dimensions is included.
        """
        from .scoring import bland_altman

        session = self.get_session(session_id)
        iteration = self.get_iteration(session_id, iteration_index)
        if iteration.status != "ready":
            raise NotReady(f"iteration {iteration_index} status is {iteration.status}")
        table = []
        for c in iteration.candidates:
            table.append(
                {
                    "candidate_id": c.id,
                    "prompt": c.prompt.text,
                    "branch": c.branch,
                    "three_d_friendly": c.gate,
                    "grayed": c.grayed,
                    "unscorable": c.unscorable,
                    "score_vector": c.score_vector,
                    "defect_map": c.defect_map,
                    "assets": c.view_hashes,
                    "mesh_ref": c.mesh_ref,
                }
            )
        doc = {
            "schema": REPORT_SCHEMA,
            "session_id": session.id,
            "iteration": iteration.index,
            "prompt": iteration.root_prompt.text,
            "score_table": table,
            "bland_altman": None,
        }
        if reference_scores:
            pairs = []
            for c in iteration.candidates:
                if c.id in reference_scores and c.score_vector:
                    present = [v["value"] for v in c.score_vector.values() if v["value"] is not None]
                    if present:
                        pairs.append((statistics.fmean(present), reference_scores[c.id]))
            if len(pairs) >= 2:
                doc["bland_altman"] = bland_altman(pairs).to_dict()
        validate_report(doc)
        return doc

    def replay(self, session_id: str, scratch_store: Path | str) -> tuple[bool, str]:
        """Re-execute a stored session and compare canonical serializations."""
        original = self.store.load(session_id)
        fresh_engine = Engine(SessionStore(scratch_store))
        replayed = fresh_engine.create_session(
            seed=original.seed,
            providers_config=original.providers_config_raw,
            engine_config=original.engine_config_raw,
        )
        for iteration in original.iterations:
            fresh_engine.run_iteration(
                replayed.id,
                iteration.root_prompt.text,
                n=iteration.options["n"],
                branches=iteration.options["branches"],
                prompt_source=iteration.root_prompt.source,
            )
        # lineage entries created by apply_keyword are re-applied verbatim
        replayed_session = fresh_engine.get_session(replayed.id)
        for entry in original.prompt_lineage:
            if entry["source"] == "keyword-merge" and entry["id"] not in {
                e["id"] for e in replayed_session.prompt_lineage
            }:
                replayed_session.prompt_lineage.append(dict(entry))
                replayed_session.current_prompt = entry["text"]
        fresh_engine.store.persist(replayed_session)

        a = canonical_json(original.to_doc())
        b = canonical_json(replayed_session.to_doc())
        if a == b:
            return True, "identical"
        for i, (ca, cb) in enumerate(zip(a, b)):
            if ca != cb:
                lo = max(0, i - 60)
                return False, f"first divergence at byte {i}: ...{a[lo:i+30]!r} vs ...{b[lo:i+30]!r}"
        return False, f"length mismatch: {len(a)} vs {len(b)}"


def validate_report(doc: dict) -> None:
    """Structural validation of the published report schema."""
    if doc.get("schema") != REPORT_SCHEMA:
        raise VersionMismatch(f"report schema must be {REPORT_SCHEMA}")
    for key in ("session_id", "iteration", "prompt", "score_table"):
        if key not in doc:
            raise StoreCorrupt(f"report missing key {key!r}")
    for row in doc["score_table"]:
        for key in ("candidate_id", "three_d_friendly", "score_vector", "defect_map"):
            if key not in row:
                raise StoreCorrupt(f"report row missing key {key!r}")
        vector = row["score_vector"]
        if vector is not None:
            if set(vector) != set(SCORE_DIMENSIONS):
                raise StoreCorrupt("score vector dimensions incomplete in report")
            for dim, entry in vector.items():
                if entry["value"] is None and entry["provenance"] != "missing":
                    raise StoreCorrupt(f"dimension {dim} missing value must be tagged missing")
