"""The main functionality of `mmkgc`."""

import logging
import shutil
from pathlib import Path
from typing import Any, Callable, Dict, List, Mapping, Optional, Sequence, Tuple, cast

import numpy as np
from typeguard import typechecked

from ._helper import Config, Scenario, SuccessLogger, attach_file_handler, load_config
from .data.corruption import corrupt_features_missing, corrupt_features_noise, sparsify_triples
from .data.features import destandardize, standardize
from .data.loading import is_binary_feature_file, load_features, load_triples, write_features, write_triples
from .data.synthetic import make_synthetic_dataset
from .data.types import FeatureTable, Modality, TripleBatch, TripleStore
from .exceptions import ConfigError, GradientCheckError
from .model.model import MultiModalKgcModel
from .numeric.checkpoint import load_checkpoint
from .numeric.gradcheck import GradientCheckReport, gradient_check_report
from .numeric.params import ParamStore
from .numeric.rng import Rng
from .training.evaluation import Metrics, evaluate_split, write_metrics
from .training.reports import gate_report, per_relation_report, write_gate_report, write_relation_report
from .training.robustness import apply_config_corruption
from .training.trainer import TrainResult, train_run

FeatureMap = Dict[Modality, FeatureTable]


@typechecked
class Toolkit:
    """Everything in the project comes back to here."""

    def __init__(self, config_file: Optional[str] = None, overrides: Optional[Mapping[str, Any]] = None):
        """Initialises the toolkit by loading the config and setting up a logger.

        Args:
            config_file (Optional[str], optional): Path to a `key = value` config file. Defaults to None.
            overrides (Optional[Mapping[str, Any]], optional): Settings that win over the file. Defaults to None.

        Raises:
            ConfigError: Raised if the config is invalid
        """
        self.logger = cast(SuccessLogger, logging.getLogger(__name__).getChild(self.__class__.__qualname__))

        self.config: Config = load_config(config_file, overrides)

        package_logger = logging.getLogger("mmkgc")
        if self.config.debug:
            package_logger.setLevel(logging.DEBUG)
        if self.config.log_file:
            attach_file_handler(self.config.log_file)

    def load_dataset(self, corrupt: bool = True) -> Tuple[TripleStore, FeatureMap]:
        """Load the configured triples and the features of the enabled modalities.

        Args:
            corrupt (bool, optional): Apply the configured corruption scenario. Defaults to True.

        Raises:
            ConfigError: Raised if no training file is configured
            DataError: Raised for unreadable or inconsistent data files

        Returns:
            Tuple[TripleStore, FeatureMap]: The dataset
        """
        config = self.config
        if not config.train_path:
            raise ConfigError("train_path is not configured")
        store = load_triples(config.train_path, config.valid_path, config.test_path)
        features: FeatureMap = {}
        for modality, path in ((Modality.IMAGE, config.image_features), (Modality.TEXT, config.text_features)):
            if path and modality in config.modalities:
                features[modality] = load_features(
                    path,
                    modality,
                    store,
                    rng=Rng(config.seed, ("imputation", modality.value)),
                    standardize_rows=config.standardize_features,
                )
        if corrupt:
            store, features = apply_config_corruption(config, store, features)
        return store, features

    def _output_dir(self, output_dir: Optional[str]) -> Path:
        path = Path(output_dir if output_dir is not None else self.config.output_dir)
        path.mkdir(parents=True, exist_ok=True)
        return path

    def train(self, output_dir: Optional[str] = None) -> TrainResult:
        """Train on the configured dataset, writing checkpoints, the loss trace and validation metrics.

        Args:
            output_dir (Optional[str], optional): Output directory. Defaults to `config.output_dir`.

        Returns:
            TrainResult: The trained model and its loss trace
        """
        store, features = self.load_dataset()
        directory = self._output_dir(output_dir)
        result = train_run(self.config, store, features, str(directory))
        if len(store.valid):
            metrics = evaluate_split(result.model, store, "valid", tie_policy=self.config.tie_policy)
            write_metrics(directory / "metrics_valid.tsv", metrics)
            self.logger.info(self._format_metrics("valid", metrics))
        return result

    def load_model(self, checkpoint: str, store: TripleStore, features: Mapping[Modality, FeatureTable]) -> MultiModalKgcModel:
        """Build the configured model and restore a checkpoint into it.

        Raises:
            CompatibilityError: Raised if the checkpoint does not fit the model or the dataset
        """
        model = MultiModalKgcModel(self.config, store, features)
        model.load_groups(load_checkpoint(checkpoint))
        self.logger.debug(f"Restored {checkpoint}")
        return model

    @staticmethod
    def _format_metrics(split: str, metrics: Metrics) -> str:
        return (
            f"{split}: MRR {metrics.mrr:.4f}, Hit@1 {metrics.hit1:.4f}, Hit@3 {metrics.hit3:.4f}, "
            f"Hit@10 {metrics.hit10:.4f} ({metrics.queries} queries)"
        )

    def evaluate(
        self, checkpoint: str, split: str = "test", per_modality: bool = False, output_dir: Optional[str] = None
    ) -> Metrics:
        """Evaluate a checkpoint on a split, writing `metrics_<split>.tsv`.

        Args:
            checkpoint (str): The checkpoint file
            split (str, optional): The split to rank. Defaults to "test".
            per_modality (bool, optional): Also write the per-relation table `relations_<split>.tsv`.
                Defaults to False.
            output_dir (Optional[str], optional): Output directory. Defaults to `config.output_dir`.

        Returns:
            Metrics: The ensemble metrics
        """
        store, features = self.load_dataset()
        model = self.load_model(checkpoint, store, features)
        directory = self._output_dir(output_dir)
        metrics = evaluate_split(model, store, split, tie_policy=self.config.tie_policy)
        write_metrics(directory / f"metrics_{split}.tsv", metrics)
        if per_modality:
            rows = per_relation_report(model, store, split, tie_policy=self.config.tie_policy)
            write_relation_report(directory / f"relations_{split}.tsv", rows)
        self.logger.info(self._format_metrics(split, metrics))
        return metrics

    def report(
        self,
        checkpoint: str,
        relations: Optional[Sequence[str]] = None,
        split: str = "test",
        output_dir: Optional[str] = None,
    ) -> Tuple[Path, Path]:
        """Write the gate weight report and the per-relation report of a checkpoint.

        Raises:
            ConfigError: Raised for unknown relation names

        Returns:
            Tuple[Path, Path]: The gate report and the per-relation report
        """
        store, features = self.load_dataset()
        model = self.load_model(checkpoint, store, features)
        directory = self._output_dir(output_dir)
        gates = gate_report(model, store, relations)
        gate_path = directory / "gates.tsv"
        write_gate_report(gate_path, gates)
        relation_path = directory / f"relations_{split}.tsv"
        write_relation_report(relation_path, per_relation_report(model, store, split, tie_policy=self.config.tie_policy))
        self.logger.info(f"Wrote {gate_path} and {relation_path}")
        return gate_path, relation_path

    def corrupt(
        self,
        scenario: Scenario,
        ratio: float,
        seed: int,
        output_dir: str,
        scale: Optional[float] = None,
        modalities: Optional[Sequence[Modality]] = None,
    ) -> Dict[str, Path]:
        """Write a corrupted copy of the configured dataset in the input file formats.

        Files a scenario does not change are copied byte for byte. Feature noise is scaled in
        standardised units and written back in raw units; removed feature rows are left out of the file.

        Args:
            scenario (Scenario): The scenario
            ratio (float): Fraction of entities or training triples affected
            seed (int): Corruption seed
            output_dir (str): Destination directory
            scale (Optional[float], optional): Noise std. Defaults to `config.corrupt_scale`.
            modalities (Optional[Sequence[Modality]], optional): Feature modalities to corrupt. Defaults to
                `config.corrupt_modalities`.

        Returns:
            Dict[str, Path]: The written files keyed by config key
        """
        config = self.config
        if not config.train_path:
            raise ConfigError("train_path is not configured")
        store = load_triples(config.train_path, config.valid_path, config.test_path)
        targets = list(modalities if modalities is not None else config.corrupt_modalities)
        directory = self._output_dir(output_dir)
        written: Dict[str, Path] = {}

        for key in ("train_path", "valid_path", "test_path"):
            source = getattr(config, key)
            if not source:
                continue
            destination = directory / Path(source).name
            sparse = sparsify_triples(store, ratio, seed) if key == "train_path" and scenario == Scenario.SPARSE else store
            if sparse is store:
                shutil.copyfile(source, destination)
            else:
                write_triples(destination, sparse.train, store)
            written[key] = destination

        for modality, key in ((Modality.IMAGE, "image_features"), (Modality.TEXT, "text_features")):
            source = getattr(config, key)
            if not source:
                continue
            destination = directory / Path(source).name
            if scenario in (Scenario.NOISE, Scenario.MISSING) and modality in targets:
                table = load_features(source, modality, store, rng=Rng(seed, ("imputation", modality.value)))
                corrupted = _corrupt_table(table, scenario, ratio, seed, scale if scale is not None else config.corrupt_scale)
                if corrupted is table:
                    shutil.copyfile(source, destination)
                else:
                    write_features(destination, corrupted, store, binary=is_binary_feature_file(source))
            else:
                shutil.copyfile(source, destination)
            written[key] = destination

        self.logger.success(f"Wrote the {scenario.value} dataset (ratio {ratio}) to {directory}")
        return written

    def gradcheck(self, corrupt_gradients: bool = False) -> Dict[str, GradientCheckReport]:
        """Check the analytic gradients of L_kgc, L_club and L_exid on a tiny random model.

        The model has 5 entities, 2 relations and the configured modalities, dimensions and switches,
        with 64-bit parameters and frozen gate noise. L_club is skipped when it is identically zero
        (a single expert or no disentanglement) and L_exid without disentanglement.

        Args:
            corrupt_gradients (bool, optional): Scale every analytic gradient by 1.5 before comparing, to
                exercise the failure path. Defaults to False.

        Raises:
            GradientCheckError: Raised with the per-loss errors if any exceeds `gradcheck_tolerance`

        Returns:
            Dict[str, GradientCheckReport]: The report per loss
        """
        config = self.config.updated(epochs=0)
        store, tables = make_synthetic_dataset(
            num_entities=5, num_relations=2, num_train=8, feature_dim=6, num_clusters=2, seed=config.seed
        )
        model = MultiModalKgcModel(config, store, tables, dtype=np.float64)
        batch = TripleBatch.from_triples(store.train)
        noise = model.draw_noise(Rng(config.seed, ("gradcheck-noise",)))

        checks: List[Tuple[str, ParamStore, Callable[[], float]]] = [
            ("L_kgc", model.params, lambda: model.kgc_loss(batch, noise))
        ]
        if config.use_exid and config.experts > 1:
            checks.append(("L_club", model.params, lambda: model.club_loss(batch)))
        if config.use_exid:
            checks.append(("L_exid", model.qparams, lambda: model.exid_loss(batch)))

        reports: Dict[str, GradientCheckReport] = {}
        for name, params, loss_fn in checks:
            if corrupt_gradients:
                loss_fn = _corrupted(loss_fn, params)
            report = gradient_check_report(
                loss_fn, params, config.gradcheck_eps, config.gradcheck_samples, rng=Rng(config.seed, ("gradcheck", name))
            )
            reports[name] = report
            self.logger.info(
                f"{name}: max relative error {report.max_relative_error:.3e} over {len(report.samples)} parameters"
            )

        failed = {name: r.max_relative_error for name, r in reports.items() if not r.max_relative_error < config.gradcheck_tolerance}
        if failed:
            summary = ", ".join(f"{name} {error:.3e}" for name, error in failed.items())
            raise GradientCheckError(f"Gradient check failed (tolerance {config.gradcheck_tolerance}): {summary}")
        self.logger.success("Gradient check passed")
        return reports


def _corrupted(loss_fn: Callable[[], float], store: ParamStore) -> Callable[[], float]:
    def wrapped() -> float:
        before = {name: grad.copy() for name, grad in store.grads.items()}
        value = loss_fn()
        for name, grad in store.grads.items():
            grad += 0.5 * (grad - before[name])
        return value

    return wrapped


def _corrupt_table(table: FeatureTable, scenario: Scenario, ratio: float, seed: int, scale: float) -> FeatureTable:
    if scenario == Scenario.MISSING:
        return corrupt_features_missing(table, ratio, seed)
    standardized, stats = standardize(table)
    noisy = corrupt_features_noise(standardized, ratio, scale, seed)
    if noisy is standardized:
        return table
    # rows without noise keep their raw values bit for bit
    touched = np.any(noisy.rows != standardized.rows, axis=1)
    rows = table.rows.copy()
    rows[touched] = destandardize(noisy, stats).rows[touched]
    return table.with_rows(rows, table.present)
