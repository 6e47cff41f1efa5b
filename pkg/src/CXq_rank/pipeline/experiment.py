"""Run-directory orchestration of the pipeline stages.

A run directory holds the config snapshot, the artifacts of every stage that
has run, and ``manifest.toml`` with seeds and content hashes. Each stage can
run on its own (the CLI subcommands) or all in order (:func:`run_experiment`).
"""

from __future__ import annotations

from collections.abc import Iterator, Sequence
from contextlib import contextmanager
from pathlib import Path
from typing import Any

from CXq_rank.config.settings import AppSettings
from CXq_rank.estimation.bias_params import BiasParams, read_params, write_params
from CXq_rank.evaluation.report import EvalReport
from CXq_rank.letor.models import SplitTag
from CXq_rank.losses.registry import LossVariant
from CXq_rank.model.checkpoint import CheckpointMeta, load_checkpoint, save_checkpoint
from CXq_rank.pipeline.run_config import RunConfig, write_config_snapshot
from CXq_rank.pipeline.stages import (
    Splits,
    estimate_stage,
    evaluate_stage,
    load_splits,
    simulate_stage,
    train_stage,
)
from CXq_rank.simulation.models import Session
from CXq_rank.simulation.sessions_io import read_sessions, write_sessions
from CXq_rank.storage.manifest import write_manifest
from CXq_rank.storage.paths import RunPaths, mark_failed, run_lock, run_paths
from CXq_rank.utils.hashing import sha256_file
from CXq_rank.utils.logging import get_logger, log_context

logger = get_logger(__name__)


class StageError(Exception):
    """A pipeline stage failed; the original exception is chained as ``__cause__``."""

    def __init__(self, stage: str, cause: BaseException) -> None:
        self.stage = stage
        super().__init__(f"stage '{stage}' failed: {type(cause).__name__}: {cause}")


class ExperimentRunner:
    """Runs stages of one config against one run directory.

    Splits are loaded once and shared by every stage the runner executes.
    """

    def __init__(self, cfg: RunConfig, settings: AppSettings) -> None:
        self.cfg = cfg.resolved()
        self.paths: RunPaths = run_paths(settings.storage, cfg.output_dir)
        self.config_hash = cfg.config_hash()
        self._splits: Splits | None = None

    @contextmanager
    def stage(self, name: str) -> Iterator[None]:
        """Tag failures with the stage name and leave a FAILED marker next to partial outputs."""
        with log_context(stage=name, run_dir=str(self.paths.root)):
            try:
                yield
            except StageError:
                raise
            except Exception as e:
                mark_failed(self.paths, name, f"{type(e).__name__}: {e}")
                raise StageError(name, e) from e

    @property
    def splits(self) -> Splits:
        if self._splits is None:
            with self.stage("data"):
                self._splits = load_splits(self.cfg)
        return self._splits

    def prepare(self) -> None:
        self.paths.failed_marker.unlink(missing_ok=True)
        write_config_snapshot(self.cfg, self.paths.config)

    def simulate(self) -> list[Session]:
        splits = self.splits
        with self.stage("simulate"):
            sessions = simulate_stage(self.cfg, splits)
            write_sessions(sessions, self.paths.sessions, config_hash=self.config_hash)
        return sessions

    def load_sessions(self) -> list[Session]:
        with self.stage("simulate"):
            return read_sessions(self.paths.sessions)

    def estimate(self, sessions: Sequence[Session] | None = None) -> BiasParams | None:
        sessions = self.load_sessions() if sessions is None else sessions
        splits = self.splits
        with self.stage("em"):
            out = estimate_stage(self.cfg, splits, sessions)
            if out.params is not None:
                write_params(out.params, self.paths.bias_params, config_hash=self.config_hash)
            if out.trace is not None:
                out.trace.write(self.paths.trace, config_hash=self.config_hash)
        return out.params

    def load_params(self) -> BiasParams | None:
        if not self.cfg.train.variant.debiased:
            return None
        with self.stage("em"):
            return read_params(self.paths.bias_params)

    def train(
        self,
        sessions: Sequence[Session] | None = None,
        params: BiasParams | None = None,
    ) -> Path:
        sessions = self.load_sessions() if sessions is None else sessions
        params = self.load_params() if params is None else params
        splits = self.splits
        with self.stage("train"):
            result = train_stage(self.cfg, splits, sessions, params)
            meta = CheckpointMeta(
                loss_variant=self.cfg.train.variant.value,
                label_source=self.cfg.train.label_source.value,
                epochs_run=result.epochs_run,
                best_valid_ndcg=result.best_valid_ndcg,
                config_hash=self.config_hash,
                normalization=None if splits.scaler is None else splits.scaler.model_dump(),
            )
            return save_checkpoint(result.ranker, self.paths.checkpoint, meta=meta)

    def evaluate(self) -> EvalReport:
        splits = self.splits
        with self.stage("evaluate"):
            ranker, meta = load_checkpoint(self.paths.checkpoint)
            if meta.config_hash is not None and meta.config_hash != self.config_hash:
                logger.warning(
                    "checkpoint_config_mismatch",
                    checkpoint_hash=meta.config_hash,
                    config_hash=self.config_hash,
                )
            report = evaluate_stage(ranker, splits)
            report.write(self.paths.report, config_hash=self.config_hash)
        return report

    def manifest_entries(self) -> dict[str, Any]:
        cfg = self.cfg
        entries: dict[str, Any] = {
            "seed": cfg.seed,
            "config_hash": self.config_hash,
            "variant": cfg.train.variant.value,
            "label_source": cfg.train.label_source.value,
            "normalize": cfg.data.normalize,
            "sessions_per_query": cfg.sim.sessions_per_query,
            "ndcg_gain": "exp2",
        }
        if self._splits is not None:
            for tag in SplitTag:
                entries[f"split.{tag.value}.sha256"] = self._splits.split_hash(tag)
        for name, path in self.paths.artifacts().items():
            entries[f"artifact.{name}.sha256"] = sha256_file(path)
        return entries

    def write_manifest(self) -> Path:
        return write_manifest(self.manifest_entries(), self.paths.manifest)


def run_experiment(cfg: RunConfig, settings: AppSettings) -> Path:
    """Simulate, estimate, train and evaluate into ``cfg.output_dir``."""
    runner = ExperimentRunner(cfg, settings)
    with run_lock(runner.paths):
        runner.prepare()
        sessions = runner.simulate()
        params = runner.estimate(sessions)
        runner.train(sessions, params)
        report = runner.evaluate()
        runner.write_manifest()
    logger.info(
        "run_complete",
        run_dir=str(runner.paths.root),
        variant=runner.cfg.train.variant.value,
        **{f"ndcg@{k}": round(v, 5) for k, v in report.ndcg_at.items()},
    )
    return runner.paths.root


def run_variants(
    cfg: RunConfig,
    variants: Sequence[LossVariant],
    settings: AppSettings,
) -> list[Path]:
    """One run per variant in sibling directories ``<output_dir>/<variant>``."""
    run_dirs = []
    for variant in variants:
        variant_cfg = cfg.with_variant(variant, output_dir=cfg.output_dir / variant.value)
        run_dirs.append(run_experiment(variant_cfg, settings))
    return run_dirs
