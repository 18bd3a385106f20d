import numpy as np

from app.schemas.config import SynthConfig
from app.services import recording_service, synth_service

SMALL_SYNTH = SynthConfig(subjects=2, c_raw=8, duration=20.0, seed=4)


def test_synthGenerate_isBitwiseDeterministic_forSeed() -> None:
    # Act
    first = synth_service.synth_generate(SMALL_SYNTH)
    second = synth_service.synth_generate(SMALL_SYNTH)

    # Assert
    for a, b in zip(first, second):
        assert a.data.tobytes() == b.data.tobytes()
        assert a.labels.tobytes() == b.labels.tobytes()


def test_synthGenerate_differsBetweenSubjectsAndSeeds() -> None:
    # Act
    first, second = synth_service.synth_generate(SMALL_SYNTH)
    reseeded = synth_service.synth_generate(SMALL_SYNTH.model_copy(update={"seed": 5}))

    # Assert
    assert not np.array_equal(first.data, second.data)
    assert not np.array_equal(first.data, reseeded[0].data)


def test_synthGenerate_alternatesLabelsEveryFiveSeconds() -> None:
    # Act
    recordings = synth_service.synth_generate(SMALL_SYNTH)

    # Assert
    assert [r.subject_id for r in recordings] == ["subject_01", "subject_02"]
    rec = recordings[0]
    assert rec.data.shape == (8, 2560)
    assert rec.data.dtype == np.float32
    segments = rec.labels.reshape(4, 640)
    assert np.all(segments == np.array([[0], [1], [0], [1]]))


def test_synthGenerate_raisesSignalPower_whenClassGapGrows() -> None:
    # Arrange
    quiet = SMALL_SYNTH.model_copy(update={"class_gap": 0.5})
    loud = SMALL_SYNTH.model_copy(update={"class_gap": 8.0})

    # Act
    quiet_power = synth_service.synth_generate(quiet)[0].data.var()
    loud_power = synth_service.synth_generate(loud)[0].data.var()

    # Assert
    assert loud_power > quiet_power


def test_writeSynthetic_writesOneLoadableFilePerSubject(tmp_path) -> None:
    # Act
    paths = synth_service.write_synthetic(SMALL_SYNTH, tmp_path / "synth")

    # Assert
    assert [p.name for p in paths] == ["subject_01.eegr", "subject_02.eegr"]
    loaded = recording_service.load_directory(tmp_path / "synth")
    generated = synth_service.synth_generate(SMALL_SYNTH)
    assert [r.data.tobytes() for r in loaded] == [r.data.tobytes() for r in generated]
