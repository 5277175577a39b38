"""Lossless SMILES tokenizer.

The tokenizer only splits text; it does not check that the token sequence
forms a valid molecule (unbalanced branches, dangling ring digits and so on
are left to the parser).
"""

from dataclasses import dataclass

from ..exceptions import UnknownCharacter, UnterminatedBracket

ATOM_ORGANIC = "atom-organic"
ATOM_BRACKET = "atom-bracket"
BOND = "bond"
BRANCH_OPEN = "branch-open"
BRANCH_CLOSE = "branch-close"
RING_CLOSURE = "ring-closure"
DOT = "dot"

ORGANIC_TWO_LETTER = ("Cl", "Br")
ORGANIC_ONE_LETTER = frozenset("BCNOPSFI" + "bcnops")
BOND_CHARS = frozenset("-=#$:/\\")


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    position: int

    def __str__(self):
        return self.text


def tokenize(text):
    """Split a SMILES string into tokens.

    Args:
        text (str): SMILES string.

    Returns:
        list[Token]: tokens whose texts concatenate back to ``text``.

    Raises:
        UnknownCharacter: a character outside the SMILES alphabet.
        UnterminatedBracket: ``[`` without a closing ``]``.
    """
    tokens = []
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if text.startswith(ORGANIC_TWO_LETTER, i):
            tokens.append(Token(ATOM_ORGANIC, text[i:i + 2], i))
            i += 2
        elif ch in ORGANIC_ONE_LETTER:
            tokens.append(Token(ATOM_ORGANIC, ch, i))
            i += 1
        elif ch == "[":
            end = text.find("]", i + 1)
            if end < 0:
                raise UnterminatedBracket("unterminated bracket atom", i)
            inner = text[i + 1:end]
            if "[" in inner:
                raise UnterminatedBracket("unterminated bracket atom", i)
            tokens.append(Token(ATOM_BRACKET, text[i:end + 1], i))
            i = end + 1
        elif ch in BOND_CHARS:
            tokens.append(Token(BOND, ch, i))
            i += 1
        elif ch == "(":
            tokens.append(Token(BRANCH_OPEN, ch, i))
            i += 1
        elif ch == ")":
            tokens.append(Token(BRANCH_CLOSE, ch, i))
            i += 1
        elif ch.isdigit() and ch.isascii():
            tokens.append(Token(RING_CLOSURE, ch, i))
            i += 1
        elif ch == "%":
            digits = text[i + 1:i + 3]
            if len(digits) != 2 or not (digits.isascii() and digits.isdigit()):
                raise UnknownCharacter("'%' must be followed by two digits", i)
            tokens.append(Token(RING_CLOSURE, text[i:i + 3], i))
            i += 3
        elif ch == ".":
            tokens.append(Token(DOT, ch, i))
            i += 1
        else:
            raise UnknownCharacter(f"unexpected character {ch!r}", i)
    return tokens


def token_texts(text):
    """Return just the token strings of ``text``; used to build vocabularies."""
    return [t.text for t in tokenize(text)]
