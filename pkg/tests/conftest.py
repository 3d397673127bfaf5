# tests/conftest.py
import numpy as np
import pytest

from nestprof.core.json_model import DocumentCollection, load_collection
from nestprof.data import fixture_path


def load_fixture(name: str) -> DocumentCollection:
    return load_collection(fixture_path(name), "json-lines")


def random_collection(seed: int, max_docs: int = 20, n_keys: int = 4, domain: int = 4, arrays: bool = True) -> DocumentCollection:
    """Small collections with collisions, missing keys and short arrays.

    Odd-numbered keys hold arrays when ``arrays`` is set; every key is
    missing from roughly one document in five.
    """
    rng = np.random.default_rng(seed)
    n_docs = int(rng.integers(2, max_docs + 1))
    documents = []
    for _ in range(n_docs):
        doc = {}
        for k in range(n_keys):
            if rng.random() < 0.2:
                continue
            if arrays and k % 2 == 1:
                doc[f"k{k}"] = [int(v) for v in rng.integers(0, domain, size=int(rng.integers(0, 3)))]
            else:
                doc[f"k{k}"] = int(rng.integers(0, domain))
        documents.append(doc)
    return DocumentCollection.from_values(documents)


@pytest.fixture
def amazon():
    return load_fixture("amazon_product")


@pytest.fixture
def linked():
    return load_fixture("linked_documents")


@pytest.fixture
def approximate():
    return load_fixture("approximate_documents")


@pytest.fixture
def make_collection():
    return random_collection
