"""HTTP labeling service: the query loop with a person supplying the labels.

Each session owns one ActiveLoop.  Training happens synchronously inside
create and label-submission calls (desk-scale models fit in seconds), so a
successful response always reflects the post-transition state.  Batch item
ids are opaque per-session tokens rather than dataset row indices, keeping
row ordering hidden from the labeler.
"""

from __future__ import annotations

import threading
import uuid
from typing import Dict, Optional

import numpy as np
from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from .config import DatasetSpec, resolve_dataset
from .data import partition
from .dynamics import DynamicsParams
from .classifiers import GbmHyperParams
from .engine import METHODS, ActiveLoop
from .errors import DynaqError, SchemaError
from .rng import PARTITION, derive_seed

AWAITING = "awaiting_labels"
TRAINING = "training"
FINISHED = "finished"


class SessionConfig(BaseModel):
    dataset: dict
    labeled0: int = Field(default=125, ge=2)
    eval_size: int = Field(default=0, ge=0)
    query_size: int = Field(default=40, ge=2)
    total_queries: Optional[int] = Field(default=None, ge=2)
    method: str = "jas.main"
    gbm: Optional[dict] = None
    dynamics: Optional[dict] = None
    seed: int = 0
    sim: int = 0
    k_folds: int = Field(default=5, ge=2)
    anomaly_trees: int = Field(default=100, ge=1)
    anomaly_subsample: int = Field(default=256, ge=2)


class LabelSubmission(BaseModel):
    labels: Dict[str, int]


class ApiError(Exception):
    def __init__(self, status: int, code: str, message: str):
        self.status = status
        self.code = code
        self.message = message
        super().__init__(message)


class Session:
    """One labeling session: loop state plus the pending-batch view."""

    def __init__(self, sid: str, cfg: SessionConfig):
        self.id = sid
        self.lock = threading.Lock()
        self.method = cfg.method
        spec = METHODS.get(cfg.method)
        if spec is None:
            raise ApiError(400, "bad_config",
                           f"unknown method {cfg.method!r}; "
                           f"expected one of {sorted(METHODS)}")
        try:
            ds_spec = DatasetSpec(**cfg.dataset)
            data, fixed_eval = resolve_dataset(ds_spec)
            gbm = (GbmHyperParams(**cfg.gbm) if cfg.gbm
                   else GbmHyperParams())
            dyn = (DynamicsParams(**cfg.dynamics) if cfg.dynamics
                   else DynamicsParams())
            part = partition(
                data, cfg.labeled0,
                0 if fixed_eval is not None else cfg.eval_size,
                fixed_eval, seed=derive_seed(cfg.seed, PARTITION, cfg.sim))
            self.loop = ActiveLoop(
                data, part.labeled, part.unlabeled, part.evaluation,
                spec, gbm, dyn, cfg.query_size,
                master_seed=cfg.seed, sim=cfg.sim, k_folds=cfg.k_folds,
                anomaly_trees=cfg.anomaly_trees,
                anomaly_subsample=cfg.anomaly_subsample)
        except (SchemaError, DynaqError, TypeError, ValueError, OSError) as exc:
            raise ApiError(400, "bad_config", str(exc)) from exc

        pool = np.concatenate([part.labeled, part.unlabeled])
        self._col_sorted = np.sort(data.features[pool], axis=0)
        if cfg.total_queries is not None:
            self.T = cfg.total_queries // cfg.query_size
        else:
            self.T = part.unlabeled.size // cfg.query_size
        self.status = TRAINING
        self.baseline_f1: Optional[float] = None
        self._batch_view: Optional[dict] = None
        self._id_to_pos: Dict[str, int] = {}
        self._advance_or_finish()

    # -- internals ----------------------------------------------------------

    def _advance_or_finish(self) -> None:
        """Train the next model; open a batch or close the session."""
        loop = self.loop
        if loop.t >= self.T or loop.unlabeled.size < loop.Q:
            loop.final_evaluation()
            self.status = FINISHED
            self._batch_view = None
            self._id_to_pos = {}
        else:
            f1 = loop.train_and_evaluate()
            if self.baseline_f1 is None:
                self.baseline_f1 = f1
            batch = loop.build_batch()
            self._build_batch_view(batch)
            self.status = AWAITING

    def _build_batch_view(self, batch) -> None:
        names = self.loop.data.feature_names or tuple(
            f"f{i}" for i in range(self.loop.data.n_features))
        n_pool = self._col_sorted.shape[0]
        items = []
        self._id_to_pos = {}
        rows = self.loop.data.features[batch.indices]
        # mid-rank percentile of each value within the session's full pool
        lo = np.array([np.searchsorted(self._col_sorted[:, j], rows[:, j], "left")
                       for j in range(rows.shape[1])]).T
        hi = np.array([np.searchsorted(self._col_sorted[:, j], rows[:, j], "right")
                       for j in range(rows.shape[1])]).T
        pct = (lo + hi) / (2.0 * n_pool)
        for pos in range(len(batch)):
            item_id = uuid.uuid4().hex
            self._id_to_pos[item_id] = pos
            items.append({
                "id": item_id,
                "y_hat": float(batch.y_hat[pos]),
                "anomalous": bool(batch.anomalous[pos]),
                "uncertain": bool(batch.uncertain[pos]),
                "random": bool(batch.random[pos]),
                "features": [
                    {"name": names[j], "value": float(rows[pos, j]),
                     "percentile": float(pct[pos, j])}
                    for j in range(rows.shape[1])],
            })
        self._batch_view = {
            "session": self.id, "t": self.loop.t,
            "query_size": self.loop.Q, "items": items}

    def _current_block(self) -> dict:
        loop = self.loop
        return {
            "t": loop.t, "labeled": int(loop.labeled.size),
            "f1": loop.current_f1,
            "status": self.status,
            "fractions": {
                "anomalous": loop.fractions.anomalous,
                "uncertain": loop.fractions.uncertain,
                "random": loop.fractions.random,
            },
        }

    # -- endpoint bodies -----------------------------------------------------

    def describe(self) -> dict:
        with self.lock:
            return {
                "id": self.id, "status": self.status, "t": self.loop.t,
                "method": self.method, "query_size": self.loop.Q,
                "labeled_size": int(self.loop.labeled.size),
                "unlabeled_size": int(self.loop.unlabeled.size),
                "total_iterations": self.T,
                "baseline_f1": self.baseline_f1,
            }

    def batch(self) -> dict:
        with self.lock:
            if self.status != AWAITING or self._batch_view is None:
                raise ApiError(409, "wrong_status",
                               f"no pending batch in status {self.status!r}")
            return self._batch_view

    def submit_labels(self, submission: LabelSubmission) -> dict:
        with self.lock:
            if self.status != AWAITING:
                raise ApiError(409, "wrong_status",
                               f"labels not accepted in status {self.status!r}")
            labels = submission.labels
            unknown = [i for i in labels if i not in self._id_to_pos]
            if unknown:
                raise ApiError(400, "unknown_item",
                               f"ids not in the pending batch: {unknown[:5]}")
            missing = [i for i in self._id_to_pos if i not in labels]
            if missing:
                raise ApiError(400, "batch_incomplete",
                               f"{len(missing)} unlabeled items remain")
            bad = {i: v for i, v in labels.items() if v not in (0, 1)}
            if bad:
                raise ApiError(400, "bad_label",
                               f"labels must be 0 or 1, got {bad}")

            arr = np.zeros(len(self._id_to_pos), dtype=np.int8)
            for item_id, value in labels.items():
                arr[self._id_to_pos[item_id]] = value
            self.status = TRAINING
            try:
                report = self.loop.complete_iteration(arr)
                self._advance_or_finish()
            except DynaqError as exc:
                self.status = AWAITING
                raise ApiError(409, "loop_error", str(exc)) from exc
            return {
                "iteration": _report_row(report),
                "next_fractions": {
                    "anomalous": self.loop.fractions.anomalous,
                    "uncertain": self.loop.fractions.uncertain,
                    "random": self.loop.fractions.random,
                },
                "current": self._current_block(),
            }

    def metrics(self) -> dict:
        with self.lock:
            rows = [_report_row(r) for r in self.loop.history
                    if r.batch_size is not None]
            return {
                "session": self.id, "method": self.method,
                "query_size": self.loop.Q,
                "baseline_f1": self.baseline_f1,
                "current": self._current_block(),
                "iterations": rows,
            }


def _report_row(report) -> dict:
    return {
        "t": report.t, "labeled": report.labeled_size,
        "f1": report.f1_eval,
        "alpha_anomalous": report.alpha_anomalous,
        "alpha_uncertain": report.alpha_uncertain,
        "alpha_random": report.alpha_random,
        "delta_anomalous": report.delta_a,
        "delta_uncertain": report.delta_z,
        "update_factor": report.factor,
        "n_anomalous": report.n_anomalous,
        "n_uncertain": report.n_uncertain,
        "n_dual": report.n_dual,
        "n_random": report.n_random,
        "batch_size": report.batch_size,
    }


def create_app(static_dir: Optional[str] = None) -> FastAPI:
    app = FastAPI(title="dynaq labeling service", version="1")
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"],
        allow_headers=["*"])
    sessions: Dict[str, Session] = {}
    registry_lock = threading.Lock()
    app.state.sessions = sessions

    @app.exception_handler(ApiError)
    async def _api_error(request: Request, exc: ApiError):
        return JSONResponse(
            status_code=exc.status,
            content={"error": {"code": exc.code, "message": exc.message}})

    def _get(sid: str) -> Session:
        with registry_lock:
            sess = sessions.get(sid)
        if sess is None:
            raise ApiError(404, "unknown_session", f"no session {sid!r}")
        return sess

    @app.post("/sessions", status_code=201)
    def create_session(cfg: SessionConfig):
        sid = uuid.uuid4().hex
        sess = Session(sid, cfg)
        with registry_lock:
            sessions[sid] = sess
        return sess.describe()

    @app.get("/sessions/{sid}")
    def get_session(sid: str):
        return _get(sid).describe()

    @app.get("/sessions/{sid}/batch")
    def get_batch(sid: str):
        return _get(sid).batch()

    @app.post("/sessions/{sid}/labels")
    def post_labels(sid: str, submission: LabelSubmission):
        return _get(sid).submit_labels(submission)

    @app.get("/sessions/{sid}/metrics")
    def get_metrics(sid: str):
        return _get(sid).metrics()

    if static_dir:
        from fastapi.staticfiles import StaticFiles
        app.mount("/", StaticFiles(directory=static_dir, html=True),
                  name="ui")
    return app
