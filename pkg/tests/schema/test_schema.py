import pytest
from pydantic import ValidationError

from boltzbit.errors import ConfigError
from boltzbit.schema import config_hash, load_document
from boltzbit.schema.commands import DistillDocument, SampleDocument, TrainDmDocument
from boltzbit.schema.experiments import ExperimentConfig
from boltzbit.schema.models import ArchitectureSpec
from boltzbit.schema.targets import Dw4Spec, GaussianSpec, GmmSpec


@pytest.mark.parametrize(
    "preset,kind",
    [("gaussian", GaussianSpec), ("gmm2", GmmSpec), ("gmm40-2d", GmmSpec), ("gmm40-10d", GmmSpec), ("dw4", Dw4Spec)],
)
def test_target_presets(preset, kind):
    assert isinstance(ExperimentConfig(target=preset).target, kind)


def test_gmm40_presets():
    assert ExperimentConfig(target="gmm40-10d").target.dim == 10
    assert ExperimentConfig().target.n_components == 40


def test_unknown_preset():
    with pytest.raises(ValidationError):
        ExperimentConfig(target="gmm41")


def test_inline_target():
    experiment = ExperimentConfig.model_validate({"target": {"kind": "dw4", "tau": 0.5}})
    assert experiment.target.tau == 0.5
    assert experiment.target.mcmc.chains == 64


def test_experiment_defaults():
    experiment = ExperimentConfig()
    assert experiment.pipelines == ["ddpm_is", "bctm_is"]
    assert experiment.seeds == [0, 1, 2, 3, 4]
    assert experiment.nfe[0] == 2


def test_experiment_validation():
    with pytest.raises(ValidationError):
        ExperimentConfig(nfe=[4, 0])
    with pytest.raises(ValidationError):
        ExperimentConfig(pipelines=[])
    with pytest.raises(ValidationError):
        ExperimentConfig(pipelines=["smc"])
    with pytest.raises(ValidationError):
        ExperimentConfig(eta=1.5)


def test_config_hash_is_stable():
    a = ExperimentConfig(target="gmm2", nfe=[4])
    assert config_hash(a) == config_hash(ExperimentConfig(target="gmm2", nfe=[4]))
    assert config_hash(a) != config_hash(ExperimentConfig(target="gmm2", nfe=[6]))
    assert len(config_hash(a)) == 64


def test_gaussian_mean_length():
    GaussianSpec(dim=3, mean=[0.0, 1.0, 2.0])
    with pytest.raises(ValidationError):
        GaussianSpec(dim=3, mean=[0.0, 1.0])


def test_gmm_explicit_components():
    with pytest.raises(ValidationError):
        GmmSpec(n_components=2, means=[[0.0, 0.0]])
    with pytest.raises(ValidationError):
        GmmSpec(n_components=2, means=[[0.0, 0.0], [1.0, 1.0]], weights=[1.0])


def test_egnn_needs_particle_layout():
    ArchitectureSpec(kind="egnn", dim=8, n_particles=4, space_dim=2)
    with pytest.raises(ValidationError):
        ArchitectureSpec(kind="egnn", dim=8)
    with pytest.raises(ValidationError):
        ArchitectureSpec(kind="egnn", dim=6, n_particles=4, space_dim=2)


def test_command_documents():
    assert TrainDmDocument().train.iterations == 20_000
    assert SampleDocument().sampler == "bctm_is"
    assert "reservoir" not in SampleDocument.model_fields
    with pytest.raises(ValidationError):
        DistillDocument()


def test_load_document(tmp_path):
    path = tmp_path / "experiment.yaml"
    path.write_text("name: small\ntarget: gmm2\nnfe: [2, 4]\nseeds: [7]\n")
    experiment = load_document(path, ExperimentConfig)
    assert experiment.name == "small"
    assert experiment.nfe == [2, 4]
    assert experiment.seeds == [7]


def test_load_empty_document(tmp_path):
    path = tmp_path / "empty.yaml"
    path.write_text("")
    assert load_document(path, SampleDocument) == SampleDocument()


def test_load_document_errors(tmp_path):
    with pytest.raises(ConfigError):
        load_document(tmp_path / "absent.yaml", ExperimentConfig)
    broken = tmp_path / "broken.yaml"
    broken.write_text("nfe: [2, 4\n")
    with pytest.raises(ConfigError):
        load_document(broken, ExperimentConfig)
    invalid = tmp_path / "invalid.yaml"
    invalid.write_text("samples: -1\n")
    with pytest.raises(ConfigError):
        load_document(invalid, ExperimentConfig)
