"""Model backends behind minimal interfaces.

The HTTP layer only needs two capabilities: ``encode`` for pooled text
features and ``topk`` for fill-mask predictions.  The real implementations
wrap checkpoints loaded through torch/transformers in evaluation mode at
32-bit precision; tests substitute in-memory stubs.
"""

from __future__ import annotations

from typing import Protocol

import numpy as np

MASK_PLACEHOLDER = "[mask]"

__all__ = [
    "MASK_PLACEHOLDER",
    "TextEncoderBackend",
    "MlmBackend",
    "ClipTextEncoder",
    "MaskedLmBackend",
]


class TextEncoderBackend(Protocol):
    model_id: str
    dim: int

    def encode(self, texts: list[str]) -> np.ndarray:
        """(n, dim) float32 pooled features, one row per text, in order."""
        ...


class MlmBackend(Protocol):
    model_id: str

    def topk(self, texts: list[str], k: int) -> list[list[dict]]:
        """Per text: k dicts {token, score, is_subword}, scores descending.

        Each text carries exactly one ``[mask]`` placeholder; the backend
        substitutes its model's mask token.
        """
        ...


class ClipTextEncoder:
    """Projected pooled text features from a contrastive vision-language
    checkpoint; inputs truncate to the encoder's context window."""

    def __init__(self, checkpoint: str, device: str = "cpu"):
        import torch
        from transformers import AutoTokenizer, CLIPTextModelWithProjection

        self._torch = torch
        self.model_id = checkpoint
        self.device = device
        self.tokenizer = AutoTokenizer.from_pretrained(checkpoint)
        self.model = CLIPTextModelWithProjection.from_pretrained(checkpoint, torch_dtype=torch.float32)
        self.model.to(device)
        self.model.eval()
        self.dim = int(self.model.config.projection_dim)

    def encode(self, texts: list[str]) -> np.ndarray:
        torch = self._torch
        with torch.no_grad():
            tokens = self.tokenizer(
                texts, padding=True, truncation=True, return_tensors="pt"
            ).to(self.device)
            features = self.model(**tokens).text_embeds
        return features.cpu().numpy().astype(np.float32)


class MaskedLmBackend:
    """Top-k fill-mask predictions with subword-continuation flags."""

    def __init__(self, checkpoint: str, device: str = "cpu"):
        import torch
        from transformers import AutoModelForMaskedLM, AutoTokenizer

        self._torch = torch
        self.model_id = checkpoint
        self.device = device
        self.tokenizer = AutoTokenizer.from_pretrained(checkpoint)
        self.model = AutoModelForMaskedLM.from_pretrained(checkpoint, torch_dtype=torch.float32)
        self.model.to(device)
        self.model.eval()

    def topk(self, texts: list[str], k: int) -> list[list[dict]]:
        torch = self._torch
        substituted = [t.replace(MASK_PLACEHOLDER, self.tokenizer.mask_token) for t in texts]
        with torch.no_grad():
            tokens = self.tokenizer(
                substituted, padding=True, truncation=True, return_tensors="pt"
            ).to(self.device)
            logits = self.model(**tokens).logits
        mask_id = self.tokenizer.mask_token_id
        results: list[list[dict]] = []
        for i in range(len(texts)):
            positions = (tokens["input_ids"][i] == mask_id).nonzero(as_tuple=True)[0]
            probs = torch.softmax(logits[i, positions[0]], dim=-1)
            scores, ids = torch.topk(probs, k)
            row = []
            for score, token_id in zip(scores.tolist(), ids.tolist()):
                token = self.tokenizer.convert_ids_to_tokens(token_id)
                row.append(
                    {
                        "token": token,
                        "score": float(score),
                        "is_subword": token.startswith("##"),
                    }
                )
            results.append(row)
        return results
