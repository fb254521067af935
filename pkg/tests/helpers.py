"""Token fixtures shared by the test modules."""
from speechdisturb.corpus import Token


def tok(i, form, upos="NOUN", head=0, deprel="dep", lemma=None):
    return Token(i, form, lemma or form, upos, head, deprel)


def sentence(*specs):
    """Build a sentence from (form, upos[, head, deprel[, lemma]]) tuples."""
    out = []
    for i, spec in enumerate(specs, start=1):
        form, upos, *rest = spec
        head = rest[0] if len(rest) > 0 else 0
        deprel = rest[1] if len(rest) > 1 else "dep"
        lemma = rest[2] if len(rest) > 2 else None
        out.append(tok(i, form, upos, head, deprel, lemma))
    return tuple(out)


def naive_derailment(words, vectors, k, content_only=False):
    """Brute-force windowed cosine, written without numpy.

    ``words`` is a list of (form, upos); ``vectors`` a plain dict of lists.
    """
    import math

    if content_only:
        words = [w for w in words if w[1] in ("NOUN", "VERB", "ADJ", "ADV")]
    forms = [w[0] for w in words]

    def usable(f):
        v = vectors.get(f)
        return v is not None and any(x != 0.0 for x in v)

    def cos(a, b):
        dot = sum(x * y for x, y in zip(a, b))
        return dot / (math.sqrt(sum(x * x for x in a)) * math.sqrt(sum(y * y for y in b)))

    word_scores = []
    for i in range(len(forms)):
        sims = []
        for j in range(i + 1, min(i + k, len(forms) - 1) + 1):
            if usable(forms[i]) and usable(forms[j]):
                sims.append(cos(vectors[forms[i]], vectors[forms[j]]))
        if sims:
            word_scores.append(sum(sims) / len(sims))
    if not word_scores:
        return None
    return sum(word_scores) / len(word_scores)


def random_response(rng, dim=10, min_len=5, max_len=60, oov_rate=0.05, prefix="w"):
    """Random (form, upos) list plus a vector dict with ``oov_rate`` of forms missing."""
    n = int(rng.integers(min_len, max_len + 1))
    tags = ["NOUN", "VERB", "ADJ", "ADV", "DET", "ADP", "PRON"]
    words, vectors = [], {}
    for i in range(n):
        form = f"{prefix}{i}"
        words.append((form, tags[int(rng.integers(len(tags)))]))
        if rng.random() >= oov_rate:
            vectors[form] = [float(x) for x in rng.standard_normal(dim)]
    return words, vectors


def separable_vectors(n=50, seed=0, separation=3.0, signal=(0, 1), n_features=12):
    """FeatureVectors where only the ``signal`` columns differ between groups."""
    import numpy as np

    from speechdisturb.classify import FeatureVector
    from speechdisturb.corpus import Group

    rng = np.random.default_rng(seed)
    out = []
    for i in range(n):
        patient = i % 2 == 1
        x = rng.standard_normal(n_features)
        if not patient:
            x[list(signal)] += separation
        out.append(FeatureVector(f"s{i}", Group.PATIENT if patient else Group.CONTROL,
                                 tuple(float(v) for v in x), (False,) * n_features))
    return out
