#!/usr/bin/env python3
"""Regenerates the committed test fixtures.

Everything here is produced by reference implementations that share no code
with the C++ engine: HuggingFace `transformers` for the encoder forward pass,
HuggingFace `tokenizers` for the BERT text pipeline, and numpy for pooling,
TF-IDF and the perturbed-masking matrix. Output is deterministic for a given
seed, so rerunning this script must leave `git status` clean.

Usage: python3 tests/fixtures/generate_fixtures.py [--seed 1234]
"""

import argparse
import json
import math
import random
from pathlib import Path

import numpy as np
import torch
from safetensors.numpy import save_file
from tokenizers import BertWordPieceTokenizer
from transformers import BertConfig, BertModel, ElectraConfig, ElectraModel

HERE = Path(__file__).resolve().parent
SPECIALS = ["[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]"]

TINY_WORDS = [
    "the", "a", "cat", "dog", "sat", "on", "mat", "social", "media", "hill",
    "this", "will", "be", "little", "different", "for", "those", "who",
    "follow", "transition", "##s", "capitol", ",", ".", "is", "was", "and",
    "of", "to", "in", "it", "run", "##ning", "big", "small", "red", "blue",
    "house", "car", "tree", "bird", "fly", "##ed", "eat", "food", "good",
    "bad", "day", "night", "man", "woman", "child", "play", "game", "water",
    "sky", "sun", "moon", "!",
]
assert len(SPECIALS) + len(TINY_WORDS) == 64

TINY_SENTENCES = [
    "the cat sat on the mat.",
    "For those who follow social media transitions on Capitol Hill, this will be a little different.",
    "a dog",
    "big",
    "the red bird was flying over the blue house and the small tree.",
    "a child played a good game in the water!",
    "the sun and the moon",
    "zebra quantum",
]

STS_TASKS = ["STS12", "STS13", "STS14", "STS15", "STS16", "STSB", "SICKR"]


def write_vocab(path, tokens):
    path.write_text("".join(t + "\n" for t in tokens), encoding="utf-8")


def make_bert_tokenizer(vocab_path):
    return BertWordPieceTokenizer(str(vocab_path), lowercase=True)


def seeded_state_dict(model, seed):
    rng = np.random.RandomState(seed)
    tensors = {}
    with torch.no_grad():
        for name, param in model.named_parameters():
            shape = tuple(param.shape)
            if "LayerNorm.weight" in name:
                values = 1.0 + rng.uniform(-0.1, 0.1, size=shape)
            elif name.endswith("bias"):
                values = rng.uniform(-0.1, 0.1, size=shape)
            elif "embeddings." in name:
                values = rng.uniform(-1.0, 1.0, size=shape)
            else:
                values = rng.uniform(-0.5, 0.5, size=shape)
            values = values.astype(np.float32)
            param.copy_(torch.from_numpy(values))
            tensors[name] = values
    return tensors


def run_reference(model, ids):
    with torch.no_grad():
        out = model(
            torch.tensor([ids]),
            token_type_ids=torch.zeros((1, len(ids)), dtype=torch.long),
            output_hidden_states=True,
            output_attentions=True,
        )
    hidden = [h[0].numpy().astype(np.float32) for h in out.hidden_states]
    attn = [a[0].numpy().astype(np.float32) for a in out.attentions]
    return hidden, attn


def word_spans(encoding):
    spans = []
    for pos, wid in enumerate(encoding.word_ids):
        if wid is None:
            continue
        if spans and spans[-1][0] == wid:
            spans[-1][2] = pos + 1
        else:
            spans.append([wid, pos, pos + 1])
    return [(b, e) for _, b, e in spans]


def basic_words(tok, text):
    normalized = tok.normalizer.normalize_str(text)
    return [w for w, _ in tok.pre_tokenizer.pre_tokenize_str(normalized)]


# ----------------------------------------------------------------- tiny model


def make_tiny_models(seed):
    out_dir = HERE / "tiny_model"
    out_dir.mkdir(exist_ok=True)
    write_vocab(out_dir / "vocab.txt", SPECIALS + TINY_WORDS)

    cfg = BertConfig(
        vocab_size=64, hidden_size=8, num_hidden_layers=2, num_attention_heads=2,
        intermediate_size=16, max_position_embeddings=32, type_vocab_size=2,
        layer_norm_eps=1e-12, hidden_act="gelu", attn_implementation="eager",
    )
    model = BertModel(cfg, add_pooling_layer=False).eval()
    tensors = seeded_state_dict(model, seed)
    save_file(tensors, str(out_dir / "model.safetensors"))
    (out_dir / "config.json").write_text(json.dumps({
        "hidden_size": 8, "num_layers": 2, "num_heads": 2,
        "intermediate_size": 16, "vocab_size": 64,
        "max_position_embeddings": 32, "type_vocab_size": 2,
        "layer_norm_eps": 1e-12,
    }, indent=2) + "\n")

    electra_dir = HERE / "tiny_electra"
    electra_dir.mkdir(exist_ok=True)
    write_vocab(electra_dir / "vocab.txt", SPECIALS + TINY_WORDS)
    ecfg = ElectraConfig(
        vocab_size=64, embedding_size=6, hidden_size=8, num_hidden_layers=2,
        num_attention_heads=2, intermediate_size=16, max_position_embeddings=32,
        type_vocab_size=2, layer_norm_eps=1e-12, hidden_act="gelu",
        attn_implementation="eager",
    )
    emodel = ElectraModel(ecfg).eval()
    etensors = seeded_state_dict(emodel, seed + 1)
    save_file(etensors, str(electra_dir / "model.safetensors"))
    (electra_dir / "config.json").write_text(json.dumps({
        "hidden_size": 8, "embedding_size": 6, "num_hidden_layers": 2,
        "num_attention_heads": 2, "intermediate_size": 16, "vocab_size": 64,
        "max_position_embeddings": 32, "type_vocab_size": 2,
        "layer_norm_eps": 1e-12,
    }, indent=2) + "\n")
    return model, emodel


def dump_oracle(model, name, tok, sentences):
    tensors = {}
    meta = []
    for k, text in enumerate(sentences):
        enc = tok.encode(text)
        hidden, attn = run_reference(model, enc.ids)
        for layer, h in enumerate(hidden):
            tensors[f"s{k}.hidden.{layer}"] = h
        for layer, a in enumerate(attn):
            for head in range(a.shape[0]):
                tensors[f"s{k}.attention.{layer + 1}.{head + 1}"] = np.ascontiguousarray(a[head])
        meta.append({"text": text, "ids": enc.ids, "word_spans": word_spans(enc)})
    out_dir = HERE / name
    out_dir.mkdir(exist_ok=True)
    save_file(tensors, str(out_dir / "oracle.safetensors"))
    (out_dir / "sentences.json").write_text(json.dumps(meta, indent=1) + "\n")
    return meta, tensors


# ----------------------------------------------------------- pooling oracle


def train_tfidf(tok, lines):
    df = {}
    for line in lines:
        for w in set(basic_words(tok, line)):
            df[w] = df.get(w, 0) + 1
    return df, len(lines)


def tfidf_weight(df, n_docs, word, tf):
    return tf * math.log2(n_docs / df.get(word, 1))


def pool_oracle(meta, tensors, tok, df, n_docs, n_layers):
    strategies = {
        "static_avg": None, "last_avg": None, "first_last_avg": None,
        "static_ditto@1-2": (1, 2), "last_ditto@2-1": (2, 1),
        "first_last_ditto@1-1": (1, 1), "first_last_ditto@2-2": (2, 2),
        "first_last_tfidf": None,
    }
    out = {}
    for name, head in strategies.items():
        rows = []
        for k, m in enumerate(meta):
            h0 = tensors[f"s{k}.hidden.0"].astype(np.float64)
            hl = tensors[f"s{k}.hidden.{n_layers}"].astype(np.float64)
            n = h0.shape[0]
            if name == "static_avg":
                v = h0.mean(axis=0)
            elif name == "last_avg":
                v = hl.mean(axis=0)
            elif name == "first_last_avg":
                v = (h0 + hl).sum(axis=0) / (2 * n)
            elif name == "first_last_tfidf":
                words = basic_words(tok, m["text"])
                w = np.zeros(n)
                for wi, (b, e) in enumerate(m["word_spans"]):
                    tf = words.count(words[wi])
                    w[b:e] = tfidf_weight(df, n_docs, words[wi], tf)
                v = (w[:, None] * (h0 + hl)).sum(axis=0) / (2 * w.sum())
            else:
                diag = np.diag(tensors[f"s{k}.attention.{head[0]}.{head[1]}"]).astype(np.float64)
                if name.startswith("static"):
                    v = (diag[:, None] * h0).sum(axis=0)
                elif name.startswith("last"):
                    v = (diag[:, None] * hl).sum(axis=0)
                else:
                    v = 0.5 * (diag[:, None] * (h0 + hl)).sum(axis=0)
            rows.append(v)
        out["pool." + name] = np.asarray(rows, dtype=np.float32)
    return out


# ------------------------------------------------------------ impact oracle


def impact_oracle(model, ids, repr_layer, mask_id):
    positions = list(range(1, len(ids) - 1))
    n = len(positions)
    f = np.zeros((n, n), dtype=np.float64)
    for a, i in enumerate(positions):
        s1 = list(ids)
        s1[i] = mask_id
        h1, _ = run_reference(model, s1)
        for b, j in enumerate(positions):
            if i == j:
                continue
            s2 = list(s1)
            s2[j] = mask_id
            h2, _ = run_reference(model, s2)
            f[a, b] = np.linalg.norm(h1[repr_layer][i].astype(np.float64) - h2[repr_layer][i].astype(np.float64))
    return f


# ---------------------------------------------------------- tokenizer parity

PARITY_WORDS = """
the of and to in a is that for it as was with be by on not he i this are or his
from at which but have an they you were her she there one all we their has been
would will can more when who what if out up so no about into than them some only
other new time could these two may first then do any like my now over such our man
me even most made after also did many before must through back years where much
your way well down should because each just those people how too little state good
very make world still own see men work long get here between both life being under
never day same another know while last might us great old year off come since
against go came right used take three social media transition capitol hill different
follow cat dog sat mat house car tree bird fly red blue green small big sun moon
water sky play game child woman food eat night bad quick brown fox jumps lazy city
river mountain music song book read write paper model language sentence word
embedding attention head layer computer science data learning machine deep network
train test cafe naive resume coop senor uber facade jalapeno don t s u a re ve ll
government president market company school student teacher system program problem
question answer number group country week month family money story fact night point
home water room mother area national business order public health city community
name president team minute idea kid body information back parent face others level
office door person art war history party result change morning reason research girl
guy moment air force education foot boy age policy everything process music
""".split()

PARITY_PIECES = """
##s ##ed ##ing ##ly ##er ##est ##tion ##ness ##ment ##al ##ize ##ful ##less ##able
##ity ##ous ##ive ##ic ##ism ##ist ##ers ##ings ##ions ##ation un re pre dis over
""".split()

CJK = list("我爱北京中国人天安门")


def build_parity_vocab():
    tokens = list(SPECIALS) + [f"[unused{i}]" for i in range(10)]
    tokens += [chr(c) for c in range(33, 127) if not chr(c).isalnum()]
    tokens += [str(d) for d in range(10)] + [chr(c) for c in range(ord("a"), ord("z") + 1)]
    tokens += ["##" + str(d) for d in range(10)]
    tokens += ["##" + chr(c) for c in range(ord("a"), ord("z") + 1)]
    tokens += CJK
    tokens += ["¡", "¿", "§", "°", "€", "£"]
    seen = set(tokens)
    for w in PARITY_WORDS + PARITY_PIECES:
        if w not in seen:
            seen.add(w)
            tokens.append(w)
    return tokens


HAND_SENTENCES = [
    "For those who follow social media transitions on Capitol Hill, this will be a little different.",
    "transitions",
    "Hello world!",
    "The quick brown fox jumps over the lazy dog.",
    "  Leading and trailing spaces   ",
    "Tabs\tand\nnewlines\r\nmixed in.",
    "Café naïve résumé coöp señor über façade jalapeño.",
    "ÀÉÎÕÜ àéîõü ÇçÑñ",
    "我爱北京天安门",
    "Mixed 中国人 and English words.",
    "Don't stop believing, it's the U.S.A.!!!",
    "Prices rose 3.14% to $1,000.50 on 2023-01-15.",
    "Email me at someone@example.com or visit http://example.com/path?q=1.",
    "Quotes: “smart” ‘single’ «guillemets» and \"plain\".",
    "Dashes – en — em ‐ hyphen - minus.",
    "Zero​width‍joiner and soft­hyphen.",
    "Non breaking em thin spaces.",
    "Control\x07bell and \x1bescape chars.",
    "Replacement � char and null\x00byte.",
    "Emoji are unknown 😀 🎉 here.",
    "supercalifragilisticexpialidocious",
    "a" * 101,
    "b" * 100,
    "Unbelievably, the preprocessing reorganization was overwhelmingly successful.",
    "Re-reading the pre-trained models' outputs...",
    "¿Qué pasa? ¡Nada!",
    "Temperature was 20°C, costing €5 or £4.",
    "Section § 3 applies.",
    "ALL CAPS SENTENCE WITH SHOUTING",
    "mIxEd CaSe WoRdS",
    "İstanbul and Iğdır are cities.",
    "The Greek letters α β γ are not in the vocab.",
    "Numbers like 1234567890 and 007.",
    "#hashtag @mention &amp; <tag> [bracket] {brace} (paren)",
    "back\\slash / forward | pipe ~ tilde ` backtick ^ caret",
    "",
    "   ",
    ".",
    "a",
    "The model reads each sentence word by word.",
]


def random_sentence(rng, words):
    n = rng.randint(1, 25)
    out = []
    for _ in range(n):
        r = rng.random()
        if r < 0.65:
            w = rng.choice(words)
        elif r < 0.8:
            w = rng.choice(words) + rng.choice(["s", "ed", "ing", "ly", "ness", "ation", "ful"])
        elif r < 0.88:
            w = "".join(rng.choice("abcdefghijklmnopqrstuvwxyz") for _ in range(rng.randint(2, 12)))
        elif r < 0.93:
            w = str(rng.randint(0, 100000))
        elif r < 0.96:
            w = rng.choice(["café", "naïve", "Ångström", "ñandú", "façade", "Müller"])
        else:
            w = rng.choice(CJK) + rng.choice(CJK)
        if rng.random() < 0.15:
            w = w.capitalize()
        elif rng.random() < 0.03:
            w = w.upper()
        out.append(w)
        if rng.random() < 0.12:
            out.append(rng.choice([",", ";", ":", "-", "'s", "...", "(", ")", "\""]))
    s = " ".join(out)
    return s[0].upper() + s[1:] + rng.choice([".", ".", "!", "?", ""])


def make_parity(seed):
    out_dir = HERE / "tokenizer"
    out_dir.mkdir(exist_ok=True)
    vocab_path = out_dir / "vocab.txt"
    write_vocab(vocab_path, build_parity_vocab())
    tok = make_bert_tokenizer(vocab_path)
    rng = random.Random(seed)
    sentences = list(HAND_SENTENCES)
    while len(sentences) < 200:
        sentences.append(random_sentence(rng, PARITY_WORDS))
    with open(out_dir / "parity.jsonl", "w", encoding="utf-8") as f:
        for text in sentences:
            enc = tok.encode(text)
            words = basic_words(tok, text)
            f.write(json.dumps({"text": text, "ids": enc.ids, "words": words},
                               ensure_ascii=False) + "\n")


# --------------------------------------------------------------- datasets


def tiny_sentence(rng):
    content = [w for w in TINY_WORDS if w.isalpha()]
    n = rng.randint(2, 9)
    s = " ".join(rng.choice(content) for _ in range(n))
    return s + rng.choice([".", "", "!"])


def make_sts(seed):
    rng = random.Random(seed)
    root = HERE / "sts_tiny"
    for task in STS_TASKS:
        d = root / task
        d.mkdir(parents=True, exist_ok=True)
        files = {"STSB": [("main", "train", 10), ("main", "dev", 24), ("main", "test", 20)],
                 "SICKR": [("main", "train", 8), ("main", "test", 16)],
                 "STS12": [("msrpar", "test", 10), ("europarl", "test", 10)]}.get(
                     task, [("news", "test", 12), ("forum", "test", 9)])
        for subset, split, count in files:
            with open(d / f"{subset}.{split}.tsv", "w", encoding="utf-8") as f:
                for _ in range(count):
                    score = round(rng.uniform(0, 5), 2)
                    f.write(f"{score}\t{tiny_sentence(rng)}\t{tiny_sentence(rng)}\n")
    corpus = [tiny_sentence(rng) for _ in range(60)]
    (HERE / "corpus.txt").write_text("".join(s + "\n" for s in corpus), encoding="utf-8")
    return corpus


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--seed", type=int, default=1234)
    args = ap.parse_args()
    torch.manual_seed(args.seed)

    make_parity(args.seed)
    corpus = make_sts(args.seed)

    model, emodel = make_tiny_models(args.seed)
    tok = make_bert_tokenizer(HERE / "tiny_model" / "vocab.txt")
    meta, tensors = dump_oracle(model, "tiny_oracle", tok, TINY_SENTENCES)
    dump_oracle(emodel, "tiny_electra_oracle", tok, TINY_SENTENCES[:4])

    df, n_docs = train_tfidf(tok, corpus)
    pooled = pool_oracle(meta, tensors, tok, df, n_docs, n_layers=2)
    save_file(pooled, str(HERE / "tiny_oracle" / "pooled.safetensors"))

    impact = {}
    for k in (0, 2):
        ids = meta[k]["ids"]
        for layer in (1, 2):
            f = impact_oracle(model, ids, layer, mask_id=4)
            impact[f"s{k}.impact.{layer}"] = f.astype(np.float32)
    save_file(impact, str(HERE / "tiny_oracle" / "impact.safetensors"))


if __name__ == "__main__":
    main()
