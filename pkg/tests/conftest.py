import pytest

from watersiem.config import PipelineConfig, TrainConfig
from watersiem.episode import simulate_all
from watersiem.models import save_model, train
from watersiem.pipeline import load_instances_dir, run_pipeline, save_sidecar
from watersiem.scenarios import SCENARIO_TABLE

SMALL_COUNT = 120
SMALL_SEED = 7


@pytest.fixture(scope="session")
def small_corpus_dir(tmp_path_factory):
    """All 15 scenarios at 120 instances each; cheap shared input."""
    out = tmp_path_factory.mktemp("corpus")
    simulate_all(out, seed=SMALL_SEED, counts={s: SMALL_COUNT for s in SCENARIO_TABLE})
    return out


@pytest.fixture(scope="session")
def small_pipeline(small_corpus_dir):
    return run_pipeline(load_instances_dir(small_corpus_dir), PipelineConfig(seed=SMALL_SEED))


@pytest.fixture(scope="session")
def knn_model_path(small_pipeline, tmp_path_factory):
    """A scenario-task k-NN model with its pipeline sidecar, as cmd_train writes them."""
    out = tmp_path_factory.mktemp("model") / "knn.json"
    model = train("knn", small_pipeline.train.X, small_pipeline.train.labels("scenario"),
                  TrainConfig(seed=SMALL_SEED))
    save_sidecar(small_pipeline, out.with_suffix(".pipeline.json"))
    save_model(model, out, scaler_id=small_pipeline.dataset_hash)
    return out
