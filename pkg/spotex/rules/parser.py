"""Rules DSL — lexer, recursive-descent parser and canonical renderer.

Grammar (keywords case-insensitive, predicate names case-sensitive):

    rules     ::= { rule }
    rule      ::= "IF" expr "THEN" message
    expr      ::= term { "OR" term }
    term      ::= factor { "AND" factor }
    factor    ::= "NOT" factor | "(" expr ")" | predicate
    predicate ::= NAME "(" [ arg { "," arg } ] ")"
    arg       ::= STRING | INTEGER
    message   ::= "{" text "}"

Strings are single-quoted with backslash escapes. Inside a message,
`\\{`, `\\}` and `\\\\` stand for literal characters and unescaped braces
must balance. `#` starts a comment running to the end of the line.
AND and OR associate to the left; NOT binds tightest.
"""

import hashlib
import logging
from collections import namedtuple
from typing import List, Optional

from spotex.config import KEYWORDS, MAX_NESTING_DEPTH
from spotex.errors import RuleSyntaxError
from spotex.rules.base import And, ArgValue, ConditionNode, Not, Or, Predicate, Rule, tree_height
from spotex.rules.registry import get_predicate

logger = logging.getLogger(__name__)


Token = namedtuple("Token", ["kind", "value", "line", "column"])

KEYWORD, NAME, STRING, INTEGER = "KEYWORD", "NAME", "STRING", "INTEGER"
LPAREN, RPAREN, COMMA, MESSAGE, EOF = "(", ")", ",", "MESSAGE", "EOF"

_ID_START = frozenset("ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz_")
_DIGITS = frozenset("0123456789")
_ID_CHARS = _ID_START | _DIGITS
_MESSAGE_ESCAPES = frozenset("{}\\")


# ─── Lexer ────────────────────────────────────────────────────────────────────

class _Lexer:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0
        self.line = 1
        self.column = 1

    def _peek(self, offset: int = 0) -> str:
        i = self.pos + offset
        return self.text[i] if i < len(self.text) else ""

    def _advance(self) -> str:
        c = self.text[self.pos]
        self.pos += 1
        if c == "\n":
            self.line += 1
            self.column = 1
        else:
            self.column += 1
        return c

    def tokens(self) -> List[Token]:
        out = []
        while True:
            self._skip_blank()
            line, column = self.line, self.column
            c = self._peek()
            if not c:
                out.append(Token(EOF, None, line, column))
                return out
            if c in _ID_START:
                word = self._read_while(_ID_CHARS)
                if word.upper() in KEYWORDS:
                    out.append(Token(KEYWORD, word.upper(), line, column))
                else:
                    out.append(Token(NAME, word, line, column))
            elif c in _DIGITS or (c == "-" and self._peek(1) in _DIGITS):
                out.append(Token(INTEGER, self._read_int(line, column), line, column))
            elif c == "'":
                out.append(Token(STRING, self._read_string(line, column), line, column))
            elif c == "{":
                out.append(Token(MESSAGE, self._read_message(line, column), line, column))
            elif c in (LPAREN, RPAREN, COMMA):
                self._advance()
                out.append(Token(c, c, line, column))
            else:
                raise RuleSyntaxError(f"unexpected character {c!r}", line, column)

    def _skip_blank(self) -> None:
        while True:
            c = self._peek()
            if c and c.isspace():
                self._advance()
            elif c == "#":
                while self._peek() and self._peek() != "\n":
                    self._advance()
            else:
                return

    def _read_while(self, allowed: frozenset) -> str:
        start = self.pos
        while self._peek() and self._peek() in allowed:
            self._advance()
        return self.text[start:self.pos]

    def _read_int(self, line: int, column: int) -> int:
        sign = -1 if self._peek() == "-" else 1
        if sign < 0:
            self._advance()
        digits = self._read_while(_DIGITS)
        if self._peek() and self._peek() in _ID_START:
            raise RuleSyntaxError(f"malformed integer literal {digits + self._peek()!r}",
                                  line, column)
        try:
            return sign * int(digits)
        except ValueError:
            raise RuleSyntaxError("integer literal too long", line, column) from None

    def _read_string(self, line: int, column: int) -> str:
        self._advance()
        chars = []
        while True:
            c = self._peek()
            if not c:
                raise RuleSyntaxError("unterminated string literal", line, column)
            self._advance()
            if c == "'":
                return "".join(chars)
            if c == "\\":
                if not self._peek():
                    raise RuleSyntaxError("unterminated string literal", line, column)
                c = self._advance()
            chars.append(c)

    def _read_message(self, line: int, column: int) -> str:
        self._advance()
        start = self.pos
        depth = 0
        while True:
            c = self._peek()
            if not c:
                raise RuleSyntaxError("unterminated message", line, column)
            if c == "\\" and self._peek(1) in _MESSAGE_ESCAPES:
                self._advance()
                self._advance()
                continue
            if c == "{":
                depth += 1
            elif c == "}":
                if depth == 0:
                    raw = self.text[start:self.pos]
                    self._advance()
                    return unescape_message(raw.strip())
                depth -= 1
            self._advance()


def tokenize(text: str) -> List[Token]:
    return _Lexer(text).tokens()


def unescape_message(raw: str) -> str:
    out = []
    i = 0
    while i < len(raw):
        c = raw[i]
        if c == "\\" and i + 1 < len(raw) and raw[i + 1] in _MESSAGE_ESCAPES:
            out.append(raw[i + 1])
            i += 2
        else:
            out.append(c)
            i += 1
    return "".join(out)


# ─── Parser ───────────────────────────────────────────────────────────────────

def _describe(tok: Token) -> str:
    if tok.kind == EOF:
        return "end of input"
    if tok.kind == MESSAGE:
        return "message"
    if tok.kind == STRING:
        return f"string {tok.value!r}"
    return repr(str(tok.value))


class _Parser:
    def __init__(self, tokens: List[Token]):
        self.tokens = tokens
        self.i = 0

    @property
    def tok(self) -> Token:
        return self.tokens[self.i]

    def _next(self) -> Token:
        tok = self.tokens[self.i]
        if tok.kind != EOF:
            self.i += 1
        return tok

    def _fail(self, expected) -> RuleSyntaxError:
        tok = self.tok
        return RuleSyntaxError(f"unexpected {_describe(tok)}", tok.line, tok.column,
                               frozenset(expected))

    def _is_keyword(self, word: str) -> bool:
        return self.tok.kind == KEYWORD and self.tok.value == word

    def _expect_keyword(self, word: str) -> Token:
        if not self._is_keyword(word):
            raise self._fail({word})
        return self._next()

    def _expect(self, kind: str, expected: Optional[set] = None) -> Token:
        if self.tok.kind != kind:
            raise self._fail(expected or {kind})
        return self._next()

    def parse_rules(self) -> List[Rule]:
        rules = []
        while self.tok.kind != EOF:
            rules.append(self.parse_rule())
        return rules

    def parse_rule(self) -> Rule:
        start = self._expect_keyword("IF")
        condition = self.parse_expr(0)
        if tree_height(condition) > MAX_NESTING_DEPTH:
            raise RuleSyntaxError(
                f"condition nested deeper than {MAX_NESTING_DEPTH} levels",
                start.line, start.column)
        if not self._is_keyword("THEN"):
            raise self._fail({"THEN", "AND", "OR"})
        self._next()
        message = self._expect(MESSAGE, {"{"}).value
        return make_rule(condition, message, line=start.line)

    def parse_expr(self, depth: int) -> ConditionNode:
        node = self.parse_term(depth)
        while self._is_keyword("OR"):
            self._next()
            node = Or(node, self.parse_term(depth))
        return node

    def parse_term(self, depth: int) -> ConditionNode:
        node = self.parse_factor(depth)
        while self._is_keyword("AND"):
            self._next()
            node = And(node, self.parse_factor(depth))
        return node

    def parse_factor(self, depth: int) -> ConditionNode:
        if depth > MAX_NESTING_DEPTH:
            raise RuleSyntaxError(f"condition nested deeper than {MAX_NESTING_DEPTH} levels",
                                  self.tok.line, self.tok.column)
        if self._is_keyword("NOT"):
            self._next()
            return Not(self.parse_factor(depth + 1))
        if self.tok.kind == LPAREN:
            self._next()
            node = self.parse_expr(depth + 1)
            self._expect(RPAREN, {")", "AND", "OR"})
            return node
        if self.tok.kind == NAME:
            return self.parse_predicate()
        raise self._fail({"NOT", "(", "predicate name"})

    def parse_predicate(self) -> Predicate:
        name_tok = self._next()
        definition = get_predicate(name_tok.value, name_tok.line, name_tok.column)
        self._expect(LPAREN)

        args: List[ArgValue] = []
        if self.tok.kind != RPAREN:
            args.append(self.parse_arg())
            while self.tok.kind == COMMA:
                self._next()
                args.append(self.parse_arg())
        self._expect(RPAREN, {")", ","} if args else {")", "string", "integer"})

        args_t = tuple(args)
        definition.validate(args_t, name_tok.line, name_tok.column)
        return Predicate(name_tok.value, args_t)

    def parse_arg(self) -> ArgValue:
        if self.tok.kind in (STRING, INTEGER):
            return self._next().value
        raise self._fail({"string", "integer"})


def parse_rules(text: str) -> List[Rule]:
    """Parse every rule in `text`; raises a RuleError subclass on the first problem."""
    rules = _Parser(tokenize(text)).parse_rules()
    logger.debug("parsed %d rule(s)", len(rules))
    return rules


def parse_rule(text: str) -> Rule:
    """Parse text holding exactly one rule."""
    parser = _Parser(tokenize(text))
    rule = parser.parse_rule()
    if parser.tok.kind != EOF:
        raise parser._fail({"end of input"})
    return rule


def load_rules(path: str) -> List[Rule]:
    with open(path, "rb") as f:
        data = f.read()
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as e:
        head = data[:e.start]
        line = head.count(b"\n") + 1
        column = e.start - (head.rfind(b"\n") + 1) + 1
        raise RuleSyntaxError(f"invalid UTF-8 byte 0x{data[e.start]:02x}", line, column) from None
    return parse_rules(text.replace("\r\n", "\n").replace("\r", "\n"))


# ─── Rendering ────────────────────────────────────────────────────────────────

_PREC_OR, _PREC_AND, _PREC_NOT, _PREC_ATOM = 1, 2, 3, 4


def render_arg(value: ArgValue) -> str:
    if isinstance(value, str):
        return "'" + value.replace("\\", "\\\\").replace("'", "\\'") + "'"
    return str(value)


def escape_message(message: str) -> str:
    return message.replace("\\", "\\\\").replace("{", "\\{").replace("}", "\\}")


def _render(node: ConditionNode, min_prec: int) -> str:
    if isinstance(node, Predicate):
        text, prec = f"{node.name}({', '.join(render_arg(a) for a in node.args)})", _PREC_ATOM
    elif isinstance(node, Not):
        text, prec = f"NOT {_render(node.child, _PREC_NOT)}", _PREC_NOT
    elif isinstance(node, And):
        # right operand needs a tighter binding to keep the tree's shape
        text = f"{_render(node.left, _PREC_AND)} AND {_render(node.right, _PREC_NOT)}"
        prec = _PREC_AND
    else:
        text = f"{_render(node.left, _PREC_OR)} OR {_render(node.right, _PREC_AND)}"
        prec = _PREC_OR
    return f"({text})" if prec < min_prec else text


def render_condition(node: ConditionNode) -> str:
    return _render(node, _PREC_OR)


def _render_parts(condition: ConditionNode, message: str) -> str:
    return f"IF {render_condition(condition)} THEN {{ {escape_message(message)} }}"


def render_rule(rule: Rule) -> str:
    """Canonical text of a rule; parse_rule(render_rule(r)) == r."""
    return _render_parts(rule.condition, rule.message)


def render_rules(rules: List[Rule]) -> str:
    return "".join(render_rule(r) + "\n" for r in rules)


def make_rule(condition: ConditionNode, message: str, line: int = 0) -> Rule:
    """Build a Rule whose id is a digest of its canonical text."""
    digest = hashlib.sha256(_render_parts(condition, message).encode("utf-8")).hexdigest()
    return Rule(id=digest[:12], condition=condition, message=message, line=line)
