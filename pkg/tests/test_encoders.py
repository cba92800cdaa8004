import numpy as np
import pytest
import torch

from wildfire_triage import encoders
from wildfire_triage.classifiers import StubTorchEncoder
from wildfire_triage.encoders import (EncoderConfig, EncoderError,
                                      FeatureCache, FeatureRecord,
                                      RecordedTextBackend, encode_image,
                                      encode_text, freeze_half)

TEXT_CFG = EncoderConfig(modality="text", checkpoint="roberta-base")
IMG_CFG = EncoderConfig(modality="image", checkpoint="google/vit-base-patch16-384")


@pytest.fixture
def tiny_image(tmp_path):
    from PIL import Image
    path = tmp_path / "img.png"
    rng = np.random.RandomState(0)
    Image.fromarray(rng.randint(0, 255, (20, 30, 3), dtype=np.uint8)).save(path)
    return path


class TestEncodeText:
    def test_empty_input(self):
        assert encode_text([], TEXT_CFG).shape == (0, 768)

    def test_identical_inputs_identical_rows(self):
        out = encode_text(["wildfire smoke", "wildfire smoke"], TEXT_CFG)
        assert out.shape == (2, 768)
        assert np.array_equal(out[0], out[1])

    def test_recorded_backend_bit_exact(self):
        stored = np.random.RandomState(1).standard_normal((4, 768))
        backend = RecordedTextBackend({"hello": stored})
        out = encode_text(["hello"], EncoderConfig(modality="text"), backend)
        assert np.array_equal(out[0], stored[0])  # cls = first token

    def test_mean_pooling_of_single_token(self):
        stored = np.random.RandomState(2).standard_normal((1, 768))
        backend = RecordedTextBackend({"x": stored})
        cfg = EncoderConfig(modality="text", pooling="mean")
        out = encode_text(["x"], cfg, backend)
        assert np.allclose(out[0], stored[0])

    def test_cls_vs_mean_differ_on_multi_token(self):
        cls_out = encode_text(["a b c"], TEXT_CFG)
        mean_out = encode_text(["a b c"], EncoderConfig(
            modality="text", checkpoint="roberta-base", pooling="mean"))
        assert not np.allclose(cls_out, mean_out)

    def test_wrong_modality_rejected(self):
        with pytest.raises(EncoderError):
            encode_text(["x"], IMG_CFG)

    def test_truncation_to_max_length(self):
        cfg = EncoderConfig(modality="text", max_text_length=4)
        long = " ".join(f"tok{i}" for i in range(100))
        shorter = " ".join(f"tok{i}" for i in range(2))
        # tail truncation: the first tokens decide the representation
        assert np.array_equal(encode_text([long], cfg), encode_text([long + " more"], cfg))
        assert not np.array_equal(encode_text([long], cfg), encode_text([shorter], cfg))


class TestEncodeImage:
    def test_empty_input(self):
        assert encode_image([], IMG_CFG).shape == (0, 768)

    def test_same_image_identical_rows(self, tiny_image):
        out = encode_image([tiny_image, tiny_image], IMG_CFG)
        assert out.shape == (2, 768)
        assert np.array_equal(out[0], out[1])

    def test_unreadable_image_reports_index(self, tmp_path):
        bad = tmp_path / "bad.png"
        bad.write_bytes(b"not an image")
        with pytest.raises(EncoderError, match="index 0"):
            encode_image([bad], IMG_CFG)


class TestFreezing:
    def test_first_half_frozen(self):
        enc = StubTorchEncoder(n_layers=12)
        freeze_half(enc)
        for i, layer in enumerate(enc.layers):
            expected = i >= 6
            assert all(p.requires_grad == expected for p in layer.parameters())

    def test_odd_layer_count_uses_floor(self):
        enc = StubTorchEncoder(n_layers=5)
        freeze_half(enc)
        frozen = [all(not p.requires_grad for p in l.parameters()) for l in enc.layers]
        assert frozen == [True, True, False, False, False]

    def test_forward_output_unchanged_by_freezing(self):
        torch.manual_seed(0)
        enc = StubTorchEncoder(n_layers=4)
        x = torch.randn(2, 768)
        before = enc(x).detach().clone()
        freeze_half(enc)
        assert torch.equal(enc(x), before)

    def test_frozen_layers_unchanged_by_training_step(self):
        torch.manual_seed(0)
        enc = StubTorchEncoder(n_layers=4)
        freeze_half(enc)
        frozen_before = [p.detach().clone() for p in enc.layers[0].parameters()]
        opt = torch.optim.Adam((p for p in enc.parameters() if p.requires_grad), lr=0.1)
        loss = enc(torch.randn(4, 768)).square().sum()
        loss.backward()
        opt.step()
        for before, after in zip(frozen_before, enc.layers[0].parameters()):
            assert torch.equal(before, after)

    def test_unfrozen_twin_moves_first_half(self):
        torch.manual_seed(0)
        enc = StubTorchEncoder(n_layers=4)
        before = [p.detach().clone() for p in enc.layers[0].parameters()]
        opt = torch.optim.Adam(enc.parameters(), lr=0.1)
        loss = enc(torch.randn(4, 768)).square().sum()
        loss.backward()
        opt.step()
        assert any(not torch.equal(b, a)
                   for b, a in zip(before, enc.layers[0].parameters()))


class TestFeatureCache:
    def _record(self, pid, seed):
        rng = np.random.RandomState(seed)
        return FeatureRecord(pid, rng.standard_normal(768),
                             rng.standard_normal(768), ("cls", "cls"))

    def test_round_trip_bit_identical(self, tmp_path):
        path = tmp_path / "cache.feats"
        cache = FeatureCache(path, "roberta-base", "vit", ("cls", "cls"))
        rec = self._record("p1", 0)
        cache.put(rec)
        cache.save()
        reloaded = FeatureCache(path, "roberta-base", "vit", ("cls", "cls"))
        got = reloaded.get("p1")
        assert np.array_equal(got.text_vec, rec.text_vec)
        assert np.array_equal(got.image_vec, rec.image_vec)

    def test_stale_cache_detected(self, tmp_path):
        path = tmp_path / "cache.feats"
        cache = FeatureCache(path, "roberta-base", "vit", ("cls", "cls"))
        cache.put(self._record("p1", 0))
        cache.save()
        with pytest.raises(EncoderError, match="stale"):
            FeatureCache(path, "other-checkpoint", "vit", ("cls", "cls"))
