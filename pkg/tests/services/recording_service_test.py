import numpy as np
import pytest

from app.exceptions.custom_exceptions import ApplicationError
from app.exceptions.error_category import ErrorCategory
from app.services import recording_service
from tests import test_data as td


def test_loadRecording_parsesGoldenFile() -> None:
    # Act
    rec = recording_service.load_recording(td.GOLDEN_EEGR)

    # Assert
    assert rec.subject_id == "s1"
    assert rec.sample_rate == 128.0
    np.testing.assert_array_equal(rec.data, [[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]])
    np.testing.assert_array_equal(rec.labels, [0, 1, 1])
    assert rec.recording_id == "golden_2x3"


def test_encodeRecording_reproducesGoldenBytes() -> None:
    # Arrange
    golden = td.GOLDEN_EEGR.read_bytes()

    # Act
    encoded = recording_service.encode_recording(recording_service.decode_recording(golden))

    # Assert
    assert encoded == golden


def test_loadRecording_isBitwiseIdentical_afterSaveRecording(tmp_path) -> None:
    # Arrange
    rec = td.make_recording(np.array([0, 0, 1, 1, 0], dtype=np.uint8), channels=3)
    path = tmp_path / "subject_01.eegr"

    # Act
    recording_service.save_recording(rec, path)
    loaded = recording_service.load_recording(path)

    # Assert
    assert loaded.data.tobytes() == rec.data.tobytes()
    assert loaded.labels.tobytes() == rec.labels.tobytes()
    assert (loaded.subject_id, loaded.sample_rate) == (rec.subject_id, rec.sample_rate)


def test_decodeRecording_raisesFormatError_whenMagicIsWrong() -> None:
    # Arrange
    buffer = b"XXXX" + td.GOLDEN_EEGR.read_bytes()[4:]

    # Act & Assert
    with pytest.raises(ApplicationError) as exc_info:
        recording_service.decode_recording(buffer)
    assert exc_info.value.data.category is ErrorCategory.FORMAT
    assert "byte 0" in exc_info.value.data.detail


def test_decodeRecording_namesExpectedAndActualSize_whenPayloadIsTruncated() -> None:
    # Arrange
    buffer = td.GOLDEN_EEGR.read_bytes()[:-5]

    # Act & Assert
    with pytest.raises(ApplicationError) as exc_info:
        recording_service.decode_recording(buffer)
    assert exc_info.value.data.category is ErrorCategory.FORMAT
    assert "expected 54 bytes, file has 49" in exc_info.value.data.detail


def test_decodeRecording_raisesFormatError_whenDimensionsOverflow() -> None:
    # Arrange
    golden = td.GOLDEN_EEGR.read_bytes()
    buffer = golden[:12] + (1 << 60).to_bytes(8, "little") + golden[20:]

    # Act & Assert
    with pytest.raises(ApplicationError) as exc_info:
        recording_service.decode_recording(buffer)
    assert exc_info.value.data.category is ErrorCategory.FORMAT
    assert "byte 8" in exc_info.value.data.detail


def test_decodeRecording_raisesFormatError_whenLabelIsNotBinary() -> None:
    # Arrange
    buffer = td.GOLDEN_EEGR.read_bytes()[:-1] + b"\x02"

    # Act & Assert
    with pytest.raises(ApplicationError) as exc_info:
        recording_service.decode_recording(buffer)
    assert exc_info.value.data.category is ErrorCategory.FORMAT
    assert "byte 53" in exc_info.value.data.detail


def test_loadDirectory_loadsFilesInNameOrder(tmp_path) -> None:
    # Arrange
    for subject in (td.VALID_SUBJECT_ID_2, td.VALID_SUBJECT_ID):
        rec = td.make_recording(np.zeros(4), subject_id=subject)
        recording_service.save_recording(rec, tmp_path / f"{subject}.eegr")

    # Act
    recordings = recording_service.load_directory(tmp_path)

    # Assert
    assert [r.subject_id for r in recordings] == [td.VALID_SUBJECT_ID, td.VALID_SUBJECT_ID_2]


def test_loadDirectory_raisesDataError_whenDirectoryHasNoRecordings(tmp_path) -> None:
    # Act & Assert
    with pytest.raises(ApplicationError) as exc_info:
        recording_service.load_directory(tmp_path)
    assert exc_info.value.data.category is ErrorCategory.DATA
