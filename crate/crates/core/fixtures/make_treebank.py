"""Writes ewt_sample.conllu: 200 English sentences in UD style.

The sentences come from a small phrase-structure grammar, so every tree,
feature bundle and relation label is known to be well formed. Run from this
directory; output is deterministic.
"""

import random

rng = random.Random(20210607)

NOUNS = [
    ("presentation", "presentations"), ("meeting", "meetings"), ("report", "reports"),
    ("manager", "managers"), ("office", "offices"), ("customer", "customers"),
    ("price", "prices"), ("flight", "flights"), ("restaurant", "restaurants"),
    ("doctor", "doctors"), ("question", "questions"), ("garden", "gardens"),
    ("box", "boxes"), ("city", "cities"), ("church", "churches"), ("day", "days"),
]
VERBS = [
    # lemma, 3sg, participle, past, transitive
    ("enjoy", "enjoys", "enjoying", "enjoyed", True),
    ("visit", "visits", "visiting", "visited", True),
    ("recommend", "recommends", "recommending", "recommended", True),
    ("fix", "fixes", "fixing", "fixed", True),
    ("need", "needs", "needing", "needed", True),
    ("call", "calls", "calling", "called", True),
    ("plan", "plans", "planning", "planned", True),
    ("arrive", "arrives", "arriving", "arrived", False),
    ("work", "works", "working", "worked", False),
    ("wait", "waits", "waiting", "waited", False),
]
ADJS = [
    ("nice", "nicer", "nicest"), ("cheap", "cheaper", "cheapest"), ("big", "bigger", "biggest"),
    ("friendly", "friendlier", "friendliest"), ("new", "newer", "newest"), ("quick", "quicker", "quickest"),
]
ADVS = [("fast", "faster", "fastest"), ("soon", "sooner", "soonest"), ("hard", "harder", "hardest")]
PLAIN_ADVS = ["very", "really", "also", "never", "here"]
PREPS = ["in", "at", "for", "with", "near", "after"]
DETS = [("the", "Definite=Def|PronType=Art"), ("a", "Definite=Ind|PronType=Art")]
PL_DETS = [("the", "Definite=Def|PronType=Art"), ("these", "Number=Plur|PronType=Dem")]
PRONOUNS = [
    ("I", "I", "Case=Nom|Number=Sing|Person=1|PronType=Prs", False),
    ("you", "you", "Case=Nom|Person=2|PronType=Prs", False),
    ("we", "we", "Case=Nom|Number=Plur|Person=1|PronType=Prs", False),
    ("they", "they", "Case=Nom|Number=Plur|Person=3|PronType=Prs", False),
    ("she", "she", "Case=Nom|Gender=Fem|Number=Sing|Person=3|PronType=Prs", True),
    ("he", "he", "Case=Nom|Gender=Masc|Number=Sing|Person=3|PronType=Prs", True),
]
POSSESSIVES = [("your", "you", "Person=2|Poss=Yes|PronType=Prs"), ("our", "we", "Number=Plur|Person=1|Poss=Yes|PronType=Prs")]


class Builder:
    def __init__(self):
        self.rows = []

    def add(self, form, lemma, upos, xpos, feats, deprel, head=None):
        self.rows.append([form, lemma, upos, xpos, feats or "_", head, deprel])
        return len(self.rows)

    def attach(self, idx, head):
        self.rows[idx - 1][5] = head


def noun_phrase(b, plural=None, allow_pp=True):
    """Adds a noun phrase; returns (head index, whether it is singular)."""
    plural = rng.random() < 0.4 if plural is None else plural
    deps = []
    sing, plur = rng.choice(NOUNS)
    r = rng.random()
    if r < 0.15:
        form, lemma, feats = rng.choice(POSSESSIVES)
        deps.append((b.add(form, lemma, "PRON", "PRP$", feats, "nmod:poss"), None))
    elif r < 0.85 or not plural:
        form, feats = rng.choice(PL_DETS if plural else DETS)
        deps.append((b.add(form, form, "DET", "DT", feats, "det"), None))
    if rng.random() < 0.45:
        pos, cmp, sup = rng.choice(ADJS)
        which = rng.random()
        if which < 0.7:
            if rng.random() < 0.3:
                deps.append((b.add("very", "very", "ADV", "RB", "", "advmod"), "adj"))
            deps.append((b.add(pos, pos, "ADJ", "JJ", "Degree=Pos", "amod"), None))
        elif which < 0.85:
            deps.append((b.add(cmp, pos, "ADJ", "JJR", "Degree=Cmp", "amod"), None))
        else:
            deps.append((b.add(sup, pos, "ADJ", "JJS", "Degree=Sup", "amod"), None))
    head = b.add(plur if plural else sing, sing, "NOUN", "NNS" if plural else "NN",
                 "Number=Plur" if plural else "Number=Sing", None)
    adj = None
    for idx, target in deps:
        if target == "adj":
            adj = idx
        else:
            b.attach(idx, head)
            if adj is not None:
                b.attach(adj, idx)
                adj = None
    if allow_pp and rng.random() < 0.3:
        prep_phrase(b, head, "nmod")
    return head, not plural


def prep_phrase(b, governor, deprel):
    prep = rng.choice(PREPS)
    case = b.add(prep, prep, "ADP", "IN", "", "case")
    noun, _ = noun_phrase(b, allow_pp=False)
    b.attach(case, noun)
    b.rows[noun - 1][6] = deprel
    b.attach(noun, governor)


def clause(b):
    if rng.random() < 0.45:
        form, lemma, feats, third = rng.choice(PRONOUNS)
        subj = b.add(form, lemma, "PRON", "PRP", feats, "nsubj")
        subj_3sg = third
    else:
        subj, subj_3sg = noun_phrase(b)
        b.rows[subj - 1][6] = "nsubj"
    lemma, s3, part, past, transitive = rng.choice(VERBS)
    tense = rng.random()
    aux = None
    if tense < 0.3:
        form, xpos, feats = (s3, "VBZ", "Mood=Ind|Number=Sing|Person=3|Tense=Pres|VerbForm=Fin") if subj_3sg \
            else (lemma, "VBP", "Mood=Ind|Tense=Pres|VerbForm=Fin")
    elif tense < 0.55:
        form, xpos, feats = past, "VBD", "Mood=Ind|Tense=Past|VerbForm=Fin"
    elif tense < 0.75:
        aux = b.add("will", "will", "AUX", "MD", "VerbForm=Fin", "aux")
        form, xpos, feats = lemma, "VB", "VerbForm=Inf"
    else:
        be, be_feats = ("is", "Mood=Ind|Number=Sing|Person=3|Tense=Pres|VerbForm=Fin") if subj_3sg \
            else ("are", "Mood=Ind|Tense=Pres|VerbForm=Fin")
        aux = b.add(be, "be", "AUX", "VBZ" if subj_3sg else "VBP", be_feats, "aux")
        form, xpos, feats = part, "VBG", "Tense=Pres|VerbForm=Part"
    if rng.random() < 0.2:
        adv = b.add(rng.choice(PLAIN_ADVS), None, "ADV", "RB", "", "advmod")
        b.rows[adv - 1][1] = b.rows[adv - 1][0]
    else:
        adv = None
    verb = b.add(form, lemma, "VERB", xpos, feats, "root")
    for dep in (subj, aux, adv):
        if dep is not None:
            b.attach(dep, verb)
    if transitive and rng.random() < 0.85:
        obj, _ = noun_phrase(b)
        b.rows[obj - 1][6] = "obj"
        b.attach(obj, verb)
    if rng.random() < 0.35:
        pos, cmp, sup = rng.choice(ADVS)
        which = rng.random()
        if which < 0.6:
            a = b.add(pos, pos, "ADV", "RB", "", "advmod")
        elif which < 0.8:
            a = b.add(cmp, pos, "ADV", "RBR", "Degree=Cmp", "advmod")
        else:
            a = b.add(sup, pos, "ADV", "RBS", "Degree=Sup", "advmod")
        b.attach(a, verb)
    if rng.random() < 0.5:
        prep_phrase(b, verb, "obl")
    return verb


def sentence():
    b = Builder()
    root = clause(b)
    b.attach(root, 0)
    if rng.random() < 0.25:
        cc = b.add("and", "and", "CCONJ", "CC", "", "cc")
        second = clause(b)
        b.rows[second - 1][6] = "conj"
        b.attach(second, root)
        b.attach(cc, second)
    first = b.rows[0]
    if first[0][0].islower():
        first[0] = first[0][0].upper() + first[0][1:]
    b.add(rng.choice([".", ".", ".", "!"]), None, "PUNCT", ".", "", "punct", root)
    b.rows[-1][1] = b.rows[-1][0]
    return b.rows


def main():
    out = []
    for i in range(1, 201):
        rows = sentence()
        out.append(f"# sent_id = sample-{i:03d}")
        out.append("# text = " + " ".join(r[0] for r in rows[:-1]) + rows[-1][0])
        for j, (form, lemma, upos, xpos, feats, head, deprel) in enumerate(rows, 1):
            assert head is not None, (i, j, rows)
            misc = "SpaceAfter=No" if j + 1 == len(rows) else "_"
            out.append("\t".join([str(j), form, lemma, upos, xpos, feats, str(head), deprel,
                                  f"{head}:{deprel}", misc]))
        out.append("")
    with open("ewt_sample.conllu", "w") as f:
        f.write("\n".join(out) + "\n")


main()
