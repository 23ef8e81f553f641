"""Complex-environment scenarios: noisy or missing features and sparse training triples."""

import logging
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

from pydantic import BaseModel, Field

from .._helper.config_loader import Config, Scenario
from ..data.corruption import corrupt_features_missing, corrupt_features_noise, sparsify_triples
from ..data.types import FeatureTable, Modality, TripleStore
from .evaluation import Metrics, evaluate_split
from .trainer import train_run

logger = logging.getLogger(__name__)

FeatureMap = Dict[Modality, FeatureTable]


class SweepResult(BaseModel):
    """Metrics of one (scenario, ratio) cell of a robustness sweep."""

    scenario: Scenario
    ratio: float = Field(..., ge=0, le=1)
    metrics: Metrics


def apply_corruption(
    store: TripleStore,
    features: Mapping[Modality, FeatureTable],
    scenario: Scenario,
    ratio: float,
    seed: int,
    scale: float = 1.0,
    modalities: Optional[Sequence[Modality]] = None,
) -> Tuple[TripleStore, FeatureMap]:
    """Apply one scenario to a loaded dataset.

    Args:
        store (TripleStore): The triples
        features (Mapping[Modality, FeatureTable]): The feature tables
        scenario (Scenario): `noise` and `missing` touch features, `sparse` touches the train split
        ratio (float): Fraction of entities (features) or triples (sparse) affected
        seed (int): Corruption seed
        scale (float, optional): Noise standard deviation. Defaults to 1.0.
        modalities (Optional[Sequence[Modality]], optional): Feature modalities to corrupt. Defaults to all.

    Returns:
        Tuple[TripleStore, FeatureMap]: The corrupted dataset; untouched parts are the same objects
    """
    corrupted = dict(features)
    targets = [m for m in (modalities if modalities is not None else list(features)) if m in features]
    if scenario == Scenario.NOISE:
        for m in targets:
            corrupted[m] = corrupt_features_noise(features[m], ratio, scale, seed)
    elif scenario == Scenario.MISSING:
        for m in targets:
            corrupted[m] = corrupt_features_missing(features[m], ratio, seed)
    elif scenario == Scenario.SPARSE:
        store = sparsify_triples(store, ratio, seed)
    return store, corrupted


def apply_config_corruption(
    config: Config, store: TripleStore, features: Mapping[Modality, FeatureTable]
) -> Tuple[TripleStore, FeatureMap]:
    """Apply the `corrupt_*` settings of a config to a loaded dataset."""
    return apply_corruption(
        store,
        features,
        config.corrupt_scenario,
        config.corrupt_ratio,
        config.corrupt_seed,
        config.corrupt_scale,
        config.corrupt_modalities,
    )


def robustness_sweep(
    config: Config,
    store: TripleStore,
    features: Mapping[Modality, FeatureTable],
    scenarios: Sequence[Scenario] = (Scenario.NOISE, Scenario.MISSING, Scenario.SPARSE),
    ratios: Sequence[float] = (0.0, 0.25, 0.5),
    split: str = "test",
) -> List[SweepResult]:
    """Train and evaluate once per scenario and ratio.

    Args:
        config (Config): The run settings; its own `corrupt_*` scenario is ignored
        store (TripleStore): The clean dataset
        features (Mapping[Modality, FeatureTable]): The clean feature tables
        scenarios (Sequence[Scenario], optional): Scenarios to run. Defaults to noise, missing and sparse.
        ratios (Sequence[float], optional): Ratios to run. Defaults to 0, 0.25 and 0.5.
        split (str, optional): The evaluated split. Defaults to "test".

    Returns:
        List[SweepResult]: One result per (scenario, ratio), scenarios outermost
    """
    results = []
    for scenario in scenarios:
        for ratio in ratios:
            corrupted_store, corrupted_features = apply_corruption(
                store, features, scenario, ratio, config.corrupt_seed, config.corrupt_scale, config.corrupt_modalities
            )
            model = train_run(config, corrupted_store, corrupted_features).model
            # the clean filter index and split are evaluated so every cell ranks the same queries
            metrics = evaluate_split(model, store, split, tie_policy=config.tie_policy)
            logger.info(f"{scenario.value} at ratio {ratio}: MRR {metrics.mrr:.4f}, Hit@1 {metrics.hit1:.4f}")
            results.append(SweepResult(scenario=scenario, ratio=ratio, metrics=metrics))
    return results
