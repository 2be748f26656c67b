"""
Parameter Store, Optimizer and Checkpoint Tests

- freezing and checksums by prefix
- Adam updates (frozen entries untouched)
- checkpoint save/load fidelity and header validation
"""
import logging
import os
import zipfile

import numpy as np
import pytest

from difftalk.autodiff import Adam, ParamStore, adam_step, load_checkpoint, read_checkpoint, save_checkpoint
from difftalk.exceptions import ContractViolation, ShapeError, ValidationError

logger = logging.getLogger(__name__)


@pytest.fixture
def store(rng):
    """Two small sub-networks under distinct prefixes"""
    params = ParamStore()
    params.add("net.a.weight", rng.standard_normal((3, 2)))
    params.add("net.a.bias", np.zeros(2))
    params.add("base.w", rng.standard_normal((4,)))
    return params


class TestParamStore:
    """Test suite for the parameter registry"""

    def test_duplicate_path_rejected(self, store):
        """Test registering a taken path raises ValidationError"""
        with pytest.raises(ValidationError):
            store.add("base.w", np.zeros(4))

    def test_prefix_selection(self, store):
        """Test prefixes match whole path segments only"""
        store.add("netx.v", np.zeros(1))
        assert store.paths("net") == ["net.a.weight", "net.a.bias"], "Prefix 'net' must not match 'netx'"
        assert store.count("net.a") == 8, "net.a holds 6 + 2 scalars"

    def test_freeze_and_unfreeze(self, store):
        """Test trainable flags follow freeze/unfreeze"""
        store.freeze("base")
        assert not store.is_trainable("base.w"), "Frozen entry should not be trainable"
        assert not store["base.w"].requires_grad, "Frozen tensor should not require grad"
        assert store.is_trainable("net.a.weight"), "Other prefixes stay trainable"
        store.unfreeze("base")
        assert store.is_trainable("base.w"), "Unfreeze should restore the flag"

    def test_checksum_tracks_values(self, store):
        """Test checksum changes only when values under the prefix change"""
        before = store.checksum("base")
        store["net.a.bias"].data = store["net.a.bias"].data + 1.0
        assert store.checksum("base") == before, "Edits elsewhere must not change the checksum"
        store["base.w"].data = store["base.w"].data + 1.0
        assert store.checksum("base") != before, "Edits under the prefix must change the checksum"

    def test_load_state_shape_mismatch(self, store):
        """Test loading a differently shaped value raises ShapeError"""
        with pytest.raises(ShapeError):
            store.load_state({"base.w": (np.zeros(5), True)})

    def test_copy_values(self, store):
        """Test copying one sub-tree onto another with the same layout"""
        store.add("copy.a.weight", np.zeros((3, 2)))
        copied = store.copy_values("net", "copy")
        assert copied == 1, "Only the path present on both sides is copied"
        assert np.array_equal(store["copy.a.weight"].data, store["net.a.weight"].data), "Values should match"


class TestAdam:
    """Test suite for the Adam optimizer"""

    @pytest.mark.smoke
    def test_single_step_decreases_quadratic(self):
        """Test one step on w^2 from w=1 lowers the loss"""
        params = ParamStore()
        w = params.add("w", np.array([1.0]))
        params.zero_grad()
        (w * w).sum().backward()
        adam_step(params, lr=0.1)
        assert (w.data ** 2).sum() < 1.0, "Loss should drop after one step"

    def test_frozen_entry_untouched(self, store):
        """Test a frozen parameter stays bit-identical"""
        store.freeze("base")
        frozen = store["base.w"].data.copy()
        optimizer = Adam(store, lr=0.1)
        for _ in range(3):
            store.zero_grad()
            loss = (store["net.a.weight"] ** 2).sum() + store["net.a.bias"].sum()
            loss.backward()
            optimizer.step()
        assert np.array_equal(store["base.w"].data, frozen), "Frozen values must not change"

    @pytest.mark.regression
    def test_converges_on_two_dimensional_quadratic(self):
        """Test 200 steps reach the minimum within 1e-4"""
        params = ParamStore()
        w = params.add("w", np.array([1.5, -2.0]))
        target = np.array([0.3, 0.7])
        optimizer = None
        for _ in range(200):
            params.zero_grad()
            (((w - target) ** 2) * np.array([1.0, 2.0])).sum().backward()
            optimizer = adam_step(params, lr=0.05, optimizer=optimizer)
        loss = float(((w.data - target) ** 2 * np.array([1.0, 2.0])).sum())
        logger.info(f"quadratic loss after 200 steps: {loss:.3e}")
        assert loss <= 1e-4, f"Loss {loss} should reach 1e-4"

    def test_missing_gradient_is_contract_violation(self, store):
        """Test stepping without gradients raises ContractViolation"""
        with pytest.raises(ContractViolation):
            Adam(store, lr=0.1).step()

    def test_prefix_scope(self, store):
        """Test an optimizer scoped to a prefix ignores other parameters"""
        store.zero_grad()
        store["net.a.weight"].grad = np.ones((3, 2))
        before = store["base.w"].data.copy()
        store["base.w"].grad = None
        Adam(store, lr=0.1, prefix="net").step()
        assert np.array_equal(store["base.w"].data, before), "Parameters outside the prefix stay put"


class TestCheckpoint:
    """Test suite for checkpoint files"""

    @pytest.mark.critical
    def test_save_load_fidelity(self, store, tmp_path):
        """Test values and flags come back exactly"""
        store.freeze("base")
        path = save_checkpoint(store, str(tmp_path / "model.npz"))
        fresh = ParamStore()
        fresh.add("net.a.weight", np.zeros((3, 2)))
        fresh.add("net.a.bias", np.ones(2))
        fresh.add("base.w", np.zeros(4))
        assert load_checkpoint(fresh, path) == 3, "All three tensors should load"
        assert fresh.checksum() == store.checksum(), "Loaded values should be bit-identical"
        assert not fresh.is_trainable("base.w"), "Frozen flag should survive the round trip"

    def test_prefix_save(self, store, tmp_path):
        """Test only the prefix is written"""
        path = save_checkpoint(store, str(tmp_path / "net.npz"), prefix="net")
        assert sorted(read_checkpoint(path)) == ["net.a.bias", "net.a.weight"], "Only net.* should be saved"

    def test_files_are_byte_identical(self, store, tmp_path):
        """Test the same parameters produce the same bytes"""
        first = save_checkpoint(store, str(tmp_path / "a.npz"))
        second = save_checkpoint(store, str(tmp_path / "b.npz"))
        with open(first, "rb") as a, open(second, "rb") as b:
            assert a.read() == b.read(), "Checkpoints of identical parameters should match byte for byte"

    def test_missing_header_rejected(self, tmp_path):
        """Test a plain npz archive is not accepted"""
        path = str(tmp_path / "plain.npz")
        np.savez(path, w=np.zeros(2))
        with pytest.raises(ValidationError):
            read_checkpoint(path)

    def test_unknown_path_strict(self, store, tmp_path):
        """Test strict loading rejects paths the model does not have"""
        path = save_checkpoint(store, str(tmp_path / "model.npz"))
        partial = ParamStore()
        partial.add("base.w", np.zeros(4))
        with pytest.raises(ValidationError):
            load_checkpoint(partial, path)
        assert load_checkpoint(partial, path, strict=False) == 3, "Non-strict loading skips unknown paths"
        assert os.path.getsize(path) > 0 and zipfile.is_zipfile(path), "Checkpoint should be a zip archive"
