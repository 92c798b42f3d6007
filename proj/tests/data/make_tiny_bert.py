"""Regenerates the tiny BERT fixture used by the encoder tests.

Writes a randomly initialised 2-layer BERT (float32 weights, the layout of
released checkpoints), its vocabulary, and float64 reference outputs computed
by the HuggingFace implementation from the same weights.
"""
import json
import pathlib

import torch
from transformers import BertConfig, BertModel

out = pathlib.Path(__file__).parent / "tiny_bert"
out.mkdir(exist_ok=True)

vocab = ["[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]", "pack", "##ing", "the", "box",
         "Maria", "was", "born", "in", "Leipzig", ",", "Germany", ".", "U", "S", "##a"]
(out / "vocab.txt").write_text("\n".join(vocab) + "\n")

torch.manual_seed(7)
config = BertConfig(vocab_size=len(vocab), hidden_size=8, num_hidden_layers=2,
                    num_attention_heads=2, intermediate_size=16, max_position_embeddings=32,
                    type_vocab_size=2, layer_norm_eps=1e-12, hidden_act="gelu")
model = BertModel(config)
with torch.no_grad():
    for p in model.parameters():
        p.normal_(0.0, 0.5)
model.eval()
model.save_pretrained(out, safe_serialization=True)

ref = model.double()
ids = [2, 9, 10, 11, 12, 13, 14, 15, 16, 3]
with torch.no_grad():
    o = ref(input_ids=torch.tensor([ids]))
(out / "reference.json").write_text(json.dumps({
    "input_ids": ids,
    "last_hidden_state": o.last_hidden_state[0].tolist(),
    "pooler_output": o.pooler_output[0].tolist(),
}, indent=1))
