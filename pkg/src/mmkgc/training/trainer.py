"""Alternating optimisation of the model and its variational networks, with per-epoch checkpoints."""

import logging
import math
import time
from pathlib import Path
from typing import List, Mapping, Optional, cast

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from .._helper.config_loader import Config, write_config
from .._helper.nice_logger import SuccessLogger
from ..data.batching import make_batches
from ..data.filtering import build_filter_index
from ..data.types import FeatureTable, Modality, TripleBatch, TripleStore
from ..model.model import MultiModalKgcModel
from ..numeric.checkpoint import save_checkpoint
from ..numeric.exceptions import NumericError
from ..numeric.optim import adam_step
from ..numeric.params import ParamStore
from ..numeric.rng import Rng
from .evaluation import Metrics, evaluate_split

logger = cast(SuccessLogger, logging.getLogger(__name__))

TRACE_FILE = "trace.tsv"
LAST_CHECKPOINT = "checkpoint.momk"
BEST_CHECKPOINT = "best.momk"
CONFIG_FILE = "config.cfg"


class EpochRecord(BaseModel):
    """Loss terms of one epoch, summed over its batches."""

    epoch: int = Field(..., description="1-based epoch number.")
    kgc: float = Field(..., description="Link prediction loss over every scoring modality.")
    club: float = Field(..., description="Unweighted CLUB penalty (0 without disentanglement).")
    exid: float = Field(..., description="Variational networks' loss, averaged over the steps of each batch.")
    modality: Mapping[str, float] = Field(..., description="Link prediction loss per scoring modality.")
    valid_mrr: Optional[float] = Field(None, description="Filtered validation MRR, when evaluated.")
    seconds: float = Field(..., description="Wall time of the epoch.")

    def trace_line(self) -> str:
        """`epoch<TAB>L_kgc<TAB>L_club<TAB>L_exid<TAB>valid_MRR`."""
        mrr = "nan" if self.valid_mrr is None else repr(self.valid_mrr)
        return f"{self.epoch}\t{self.kgc!r}\t{self.club!r}\t{self.exid!r}\t{mrr}"


class TrainResult(BaseModel):
    """What a training run produced."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    model: MultiModalKgcModel
    trace: List[EpochRecord]
    best_epoch: int = Field(..., description="Epoch of the best validation MRR (0 is the initialisation).")
    best_valid_mrr: Optional[float] = None
    checkpoint: Optional[Path] = Field(None, description="The last checkpoint, if an output directory was given.")
    best_checkpoint: Optional[Path] = None


def _require_finite(term: str, value: float) -> None:
    if not math.isfinite(value):
        raise NumericError(f"Training diverged: {term} is {value}")


class Trainer:
    """Runs the training loop for one config and dataset."""

    def __init__(
        self,
        config: Config,
        store: TripleStore,
        features: Optional[Mapping[Modality, FeatureTable]] = None,
        output_dir: Optional[str] = None,
    ) -> None:
        """Build the model.

        Args:
            config (Config): The run settings
            store (TripleStore): The dataset
            features (Optional[Mapping[Modality, FeatureTable]], optional): Image and text features.
                Defaults to None.
            output_dir (Optional[str], optional): Where checkpoints and the loss trace go; nothing is
                written when `None`. Defaults to None.
        """
        self.logger = cast(SuccessLogger, logging.getLogger(__name__).getChild(self.__class__.__qualname__))
        self.config = config
        self.store = store
        self.model = MultiModalKgcModel(config, store, features)
        self.output_dir = Path(output_dir) if output_dir is not None else None
        self.filter_index = build_filter_index(store)

    def _adam(self, store: ParamStore, lr: float) -> None:
        adam_step(store, lr, self.config.beta1, self.config.beta2, self.config.adam_eps)
        if self.config.debug:
            store.check_finite()

    def train_step(self, batch: TripleBatch, noise_rng: Rng) -> EpochRecord:
        """One alternating step: variational networks first, then the model.

        Raises:
            NumericError: Raised naming the loss term that became non-finite

        Returns:
            EpochRecord: The step's losses (`epoch` 0, `seconds` 0)
        """
        model, config = self.model, self.config
        noise = model.draw_noise(noise_rng)

        exid = 0.0
        if config.use_exid:
            for _ in range(config.exid_steps):
                value = model.exid_loss(batch, accumulate=True)
                _require_finite("L_exid", value)
                exid += value / config.exid_steps
                self._adam(model.qparams, config.resolved_exid_lr)

        terms = model.objective(batch, noise, club_weight=config.lambda_ if config.use_exid else 0.0)
        _require_finite("L_kgc", terms.kgc)
        _require_finite("L_club", terms.club)
        self._adam(model.params, config.lr)
        return EpochRecord(
            epoch=0,
            kgc=terms.kgc,
            club=terms.club,
            exid=exid,
            modality={m.value: value for m, value in terms.modality.items()},
            seconds=0.0,
        )

    def _validate(self) -> Optional[Metrics]:
        if len(self.store.valid) == 0:
            return None
        return evaluate_split(self.model, self.store, "valid", self.filter_index, self.config.tie_policy)

    def _write_checkpoint(self, name: str) -> Optional[Path]:
        if self.output_dir is None:
            return None
        path = self.output_dir / name
        save_checkpoint(path, self.model.checkpoint_groups())
        return path

    def run(self) -> TrainResult:
        """Train for `config.epochs` epochs.

        The initial parameters are checkpointed before the first epoch, then after every epoch; the
        checkpoint with the best validation MRR is kept separately (the latest one when there is no
        validation split).

        Raises:
            NumericError: Raised naming the loss term that became non-finite

        Returns:
            TrainResult: The trained model and its loss trace
        """
        config = self.config
        if self.output_dir is not None:
            self.output_dir.mkdir(parents=True, exist_ok=True)
            write_config(str(self.output_dir / CONFIG_FILE), config)
            (self.output_dir / TRACE_FILE).write_text("", encoding="utf-8")

        counts = self.model.parameter_counts()
        self.logger.info(
            f"Training {', '.join(m.value for m in self.model.scoring_modalities)} for {config.epochs} epochs "
            f"({', '.join(f'{name}: {count} parameters' for name, count in counts.items())})"
        )

        checkpoint = self._write_checkpoint(LAST_CHECKPOINT)
        best_checkpoint = self._write_checkpoint(BEST_CHECKPOINT)
        best_epoch, best_mrr = 0, None
        trace: List[EpochRecord] = []

        for epoch in range(1, config.epochs + 1):
            started = time.perf_counter()
            batches = make_batches(self.store, config.batch_size, config.seed + epoch)
            steps = [
                self.train_step(batch, Rng(config.seed, ("gate-noise", str(epoch), str(index))))
                for index, batch in enumerate(batches)
            ]
            modality = {key: float(sum(step.modality[key] for step in steps)) for key in steps[0].modality} if steps else {}

            metrics = None
            if config.eval_every and epoch % config.eval_every == 0:
                metrics = self._validate()
            record = EpochRecord(
                epoch=epoch,
                kgc=float(sum(step.kgc for step in steps)),
                club=float(sum(step.club for step in steps)),
                exid=float(sum(step.exid for step in steps)),
                modality=modality,
                valid_mrr=None if metrics is None else metrics.mrr,
                seconds=time.perf_counter() - started,
            )
            trace.append(record)

            checkpoint = self._write_checkpoint(LAST_CHECKPOINT)
            improved = metrics is None and len(self.store.valid) == 0
            if metrics is not None and (best_mrr is None or metrics.mrr > best_mrr):
                best_mrr, improved = metrics.mrr, True
            if improved:
                best_epoch = epoch
                best_checkpoint = self._write_checkpoint(BEST_CHECKPOINT)
            if self.output_dir is not None:
                with open(self.output_dir / TRACE_FILE, "a", encoding="utf-8") as f:
                    f.write(record.trace_line() + "\n")

            valid_text = "" if record.valid_mrr is None else f", valid MRR {record.valid_mrr:.4f}"
            self.logger.info(
                f"Epoch {epoch}: L_kgc {record.kgc:.4f}, L_club {record.club:.4f}, L_exid {record.exid:.4f}"
                f"{valid_text} ({record.seconds:.2f}s)"
            )

        self.logger.success(f"Finished training after {config.epochs} epochs (best epoch {best_epoch})")
        return TrainResult(
            model=self.model,
            trace=trace,
            best_epoch=best_epoch,
            best_valid_mrr=best_mrr,
            checkpoint=checkpoint,
            best_checkpoint=best_checkpoint,
        )


def train_run(
    config: Config,
    store: TripleStore,
    features: Optional[Mapping[Modality, FeatureTable]] = None,
    output_dir: Optional[str] = None,
) -> TrainResult:
    """Train a model on a dataset; see `Trainer.run`."""
    return Trainer(config, store, features, output_dir).run()


def trace_losses(trace: List[EpochRecord]) -> np.ndarray:
    """The L_kgc column of a loss trace."""
    return np.asarray([record.kgc for record in trace], dtype=np.float64)
