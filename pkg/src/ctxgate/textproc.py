"""Text normalization for UI-derived tokens.

Turns widget texts, resource ids and method signatures into lowercase
tokens (identifier splitting), filters stopwords, applies Porter stemming,
and maps tokens into a fixed hashed index space so that vocabulary never
has to grow while models are updated online.
"""

from __future__ import annotations

import re
from importlib import resources

STOPWORDS_VERSION = "v1"

HASH_DIM = 65536

_FNV64_OFFSET = 0xCBF29CE484222325
_FNV64_PRIME = 0x100000001B3
_U64 = (1 << 64) - 1

# Maximal alphanumeric runs; everything else (including '_', '/', ':', '.')
# is a separator.
_RUN_RE = re.compile(r"[A-Za-z0-9]+")

# Splits one run at camelCase and letter<->digit boundaries:
# acronym run followed by a capitalized word, a normal word, a trailing
# acronym run, or a digit run.
_PIECE_RE = re.compile(
    r"[A-Z]+(?=[A-Z][a-z])|[A-Z]?[a-z]+|[A-Z]+|[0-9]+"
)


def split_identifier(s: str) -> list[str]:
    """Split an identifier or free text into lowercase tokens.

    "co.uk.samsnyder.pa:id/speakButton" -> [..., "speak", "button"];
    digit runs such as "00" are kept as their own tokens.
    """
    tokens: list[str] = []
    for run in _RUN_RE.findall(s):
        for piece in _PIECE_RE.findall(run):
            tokens.append(piece.lower())
    return tokens


def load_stopwords() -> frozenset[str]:
    text = (
        resources.files("ctxgate.data")
        .joinpath(f"stopwords_en_{STOPWORDS_VERSION}.txt")
        .read_text(encoding="utf-8")
    )
    words = frozenset(w for w in text.split() if w)
    if not words:
        raise ValueError("stopword list is empty")
    return words


_STOPWORDS: frozenset[str] | None = None


def stopwords() -> frozenset[str]:
    global _STOPWORDS
    if _STOPWORDS is None:
        _STOPWORDS = load_stopwords()
    return _STOPWORDS


def fnv1a64(data: bytes) -> int:
    h = _FNV64_OFFSET
    for b in data:
        h ^= b
        h = (h * _FNV64_PRIME) & _U64
    return h


def hash_token(set_tag: str, token: str, dim: int = HASH_DIM) -> int:
    """Bucket index of `token` in the hashed space of one feature set.

    The tag is part of the hash preimage, so the same token never shares
    a bucket across feature sets by construction.
    """
    if not token:
        raise ValueError("cannot hash an empty token")
    return fnv1a64(f"{set_tag}:{token}".encode("utf-8")) % dim


class PorterStemmer:
    """Porter (1980) suffix-stripping stemmer.

    Follows the reference implementation, including its departures:
    words of length <= 2 are returned unchanged, step 2 maps
    "bli" -> "ble" and "logi" -> "log". Tokens containing non-letters
    (e.g. digit runs) pass through untouched.
    """

    def stem(self, word: str) -> str:
        if len(word) <= 2 or not word.isalpha():
            return word
        self._b = word
        self._k = len(word) - 1
        self._j = 0
        self._step1ab()
        self._step1c()
        self._step2()
        self._step3()
        self._step4()
        self._step5()
        return self._b[: self._k + 1]

    def _cons(self, i: int) -> bool:
        ch = self._b[i]
        if ch in "aeiou":
            return False
        if ch == "y":
            return True if i == 0 else not self._cons(i - 1)
        return True

    def _m(self) -> int:
        # Number of consonant-vowel sequences in b[0.._j].
        n = 0
        i = 0
        while True:
            if i > self._j:
                return n
            if not self._cons(i):
                break
            i += 1
        i += 1
        while True:
            while True:
                if i > self._j:
                    return n
                if self._cons(i):
                    break
                i += 1
            i += 1
            n += 1
            while True:
                if i > self._j:
                    return n
                if not self._cons(i):
                    break
                i += 1
            i += 1

    def _vowel_in_stem(self) -> bool:
        return any(not self._cons(i) for i in range(self._j + 1))

    def _doublec(self, j: int) -> bool:
        if j < 1:
            return False
        if self._b[j] != self._b[j - 1]:
            return False
        return self._cons(j)

    def _cvc(self, i: int) -> bool:
        if i < 2 or not self._cons(i) or self._cons(i - 1) or not self._cons(i - 2):
            return False
        return self._b[i] not in "wxy"

    def _ends(self, s: str) -> bool:
        length = len(s)
        if length > self._k + 1:
            return False
        if self._b[self._k - length + 1 : self._k + 1] != s:
            return False
        self._j = self._k - length
        return True

    def _setto(self, s: str) -> None:
        self._b = self._b[: self._j + 1] + s + self._b[self._j + 1 + len(s) :]
        self._k = self._j + len(s)

    def _r(self, s: str) -> None:
        if self._m() > 0:
            self._setto(s)

    def _step1ab(self) -> None:
        if self._b[self._k] == "s":
            if self._ends("sses"):
                self._k -= 2
            elif self._ends("ies"):
                self._setto("i")
            elif self._b[self._k - 1] != "s":
                self._k -= 1
        if self._ends("eed"):
            if self._m() > 0:
                self._k -= 1
        elif (self._ends("ed") or self._ends("ing")) and self._vowel_in_stem():
            self._k = self._j
            if self._ends("at"):
                self._setto("ate")
            elif self._ends("bl"):
                self._setto("ble")
            elif self._ends("iz"):
                self._setto("ize")
            elif self._doublec(self._k):
                self._k -= 1
                if self._b[self._k] in "lsz":
                    self._k += 1
            elif self._m() == 1 and self._cvc(self._k):
                self._setto("e")

    def _step1c(self) -> None:
        if self._ends("y") and self._vowel_in_stem():
            self._b = self._b[: self._k] + "i" + self._b[self._k + 1 :]

    def _step2(self) -> None:
        rules = {
            "a": (("ational", "ate"), ("tional", "tion")),
            "c": (("enci", "ence"), ("anci", "ance")),
            "e": (("izer", "ize"),),
            "l": (
                ("bli", "ble"),
                ("alli", "al"),
                ("entli", "ent"),
                ("eli", "e"),
                ("ousli", "ous"),
            ),
            "o": (("ization", "ize"), ("ation", "ate"), ("ator", "ate")),
            "s": (
                ("alism", "al"),
                ("iveness", "ive"),
                ("fulness", "ful"),
                ("ousness", "ous"),
            ),
            "t": (("aliti", "al"), ("iviti", "ive"), ("biliti", "ble")),
            "g": (("logi", "log"),),
        }
        for suffix, repl in rules.get(self._b[self._k - 1], ()):
            if self._ends(suffix):
                self._r(repl)
                return

    def _step3(self) -> None:
        rules = {
            "e": (("icate", "ic"), ("ative", ""), ("alize", "al")),
            "i": (("iciti", "ic"),),
            "l": (("ical", "ic"), ("ful", "")),
            "s": (("ness", ""),),
        }
        for suffix, repl in rules.get(self._b[self._k], ()):
            if self._ends(suffix):
                self._r(repl)
                return

    def _step4(self) -> None:
        suffixes = {
            "a": ("al",),
            "c": ("ance", "ence"),
            "e": ("er",),
            "i": ("ic",),
            "l": ("able", "ible"),
            "n": ("ant", "ement", "ment", "ent"),
            "o": ("ion", "ou"),
            "s": ("ism",),
            "t": ("ate", "iti"),
            "u": ("ous",),
            "v": ("ive",),
            "z": ("ize",),
        }
        for suffix in suffixes.get(self._b[self._k - 1], ()):
            if self._ends(suffix):
                if suffix == "ion" and self._b[self._j] not in "st":
                    continue
                if self._m() > 1:
                    self._k = self._j
                return

    def _step5(self) -> None:
        self._j = self._k
        if self._b[self._k] == "e":
            a = self._m()
            if a > 1 or (a == 1 and not self._cvc(self._k - 1)):
                self._k -= 1
        if self._b[self._k] == "l" and self._doublec(self._k) and self._m() > 1:
            self._k -= 1


_STEMMER = PorterStemmer()


def porter_stem(token: str) -> str:
    return _STEMMER.stem(token)


def normalize(text: str) -> list[str]:
    """split -> stopword filter -> stem; the pipeline for who/what tokens."""
    stop = stopwords()
    return [porter_stem(t) for t in split_identifier(text) if t not in stop]
