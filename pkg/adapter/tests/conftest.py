import numpy as np
import pytest
import torch
from transformers import T5Config, T5ForConditionalGeneration

from mds_adapter.tokenizers import WhitespaceTokenizer

TOY_SENTENCES = [
    ("the patient took Aspirin daily", "der Patient nahm täglich Aspirin"),
    ("Paris is the capital of France", "Paris ist die Hauptstadt von Frankreich"),
    ("doctor Smith examined the wound", "Doktor Smith untersuchte die Wunde"),
    ("the trial tested Ibuprofen", "die Studie testete Ibuprofen"),
    ("Berlin hosted the conference", "Berlin war Gastgeber der Konferenz"),
    ("the nurse measured blood pressure", "die Schwester mass den Blutdruck"),
    ("professor Lee published results", "Professor Lee veröffentlichte Ergebnisse"),
    ("the dose was increased", "die Dosis wurde erhöht"),
    ("Tokyo approved the vaccine", "Tokio genehmigte den Impfstoff"),
    ("symptoms improved after treatment", "Symptome besserten sich nach Behandlung"),
    ("the surgeon operated on Monday", "der Chirurg operierte am Montag"),
    ("Madrid reported new cases", "Madrid meldete neue Fälle"),
    ("the committee reviewed the study", "der Ausschuss prüfte die Studie"),
    ("patients received Paracetamol", "Patienten erhielten Paracetamol"),
    ("the lab confirmed the diagnosis", "das Labor bestätigte die Diagnose"),
    ("London extended the program", "London verlängerte das Programm"),
    ("the fever subsided quickly", "das Fieber klang schnell ab"),
    ("researcher Chen analyzed samples", "Forscher Chen analysierte Proben"),
    ("the clinic opened early", "die Klinik öffnete früh"),
    ("Vienna funded the research", "Wien finanzierte die Forschung"),
]


@pytest.fixture(scope="session")
def toy_corpus():
    return [{"id": f"t{i:03d}", "src": src, "tgt": tgt}
            for i, (src, tgt) in enumerate(TOY_SENTENCES)]


@pytest.fixture(scope="session")
def tokenizer(toy_corpus):
    words = []
    for rec in toy_corpus:
        words.extend(rec["src"].split())
        words.extend(rec["tgt"].split())
    return WhitespaceTokenizer(words)


@pytest.fixture(scope="session")
def tiny_model(tokenizer):
    torch.manual_seed(0)
    config = T5Config(
        vocab_size=tokenizer.vocab_size,
        d_model=16, d_kv=4, d_ff=32,
        num_layers=1, num_heads=2,
        pad_token_id=tokenizer.pad_id,
        eos_token_id=tokenizer.eos_id,
        decoder_start_token_id=tokenizer.pad_id,
    )
    model = T5ForConditionalGeneration(config)
    model.eval()
    return model


@pytest.fixture
def hash_encoder():
    def encode(texts):
        rows = []
        for text in texts:
            rng = np.random.default_rng(abs(hash(text)) % (2 ** 32))
            rows.append(rng.normal(size=12))
        return np.asarray(rows, dtype=np.float32)
    return encode


@pytest.fixture
def capital_word_recognizer():
    """Entity = maximal run of capitalized words (offline NER stand-in)."""
    import re

    def recognize(text):
        return [{"start": m.start(), "end": m.end(), "label": "ENT",
                 "score": 0.9}
                for m in re.finditer(r"(?:[A-Z][a-zäöü]+)(?: [A-Z][a-zäöü]+)*", text)]
    return recognize
