"""
Translation of terms into clauses.

Booleans become one literal, bitvectors a list of literals (least significant
bit first), arrays a list of such lists. Gates are Tseitin-encoded and
structurally hashed; constant inputs are folded before a gate is created.
"""

from core.exceptions import WidthMismatch


class BitBlaster:

    def __init__(self, sink):
        self.sink = sink
        self.T = sink.true_literal
        self.F = -self.T
        self.cache = {}
        self.gates = {}

    def _clause(self, *lits):
        self.sink.add_clause(list(lits))

    # Gates

    def g_and(self, a, b):
        T, F = self.T, self.F
        if a == F or b == F or a == -b:
            return F
        if a == T or a == b:
            return b
        if b == T:
            return a
        key = ('and', min(a, b), max(a, b))
        out = self.gates.get(key)
        if out is None:
            out = self.sink.new_var()
            self._clause(-out, a)
            self._clause(-out, b)
            self._clause(out, -a, -b)
            self.gates[key] = out
        return out

    def g_or(self, a, b):
        return -self.g_and(-a, -b)

    def g_xor(self, a, b):
        T, F = self.T, self.F
        if a == F:
            return b
        if b == F:
            return a
        if a == T:
            return -b
        if b == T:
            return -a
        if a == b:
            return F
        if a == -b:
            return T
        sign = 1
        if a < 0:
            a, sign = -a, -sign
        if b < 0:
            b, sign = -b, -sign
        key = ('xor', min(a, b), max(a, b))
        out = self.gates.get(key)
        if out is None:
            out = self.sink.new_var()
            self._clause(-out, a, b)
            self._clause(-out, -a, -b)
            self._clause(out, -a, b)
            self._clause(out, a, -b)
            self.gates[key] = out
        return sign * out

    def g_ite(self, c, a, b):
        T, F = self.T, self.F
        if c == T or a == b:
            return a
        if c == F:
            return b
        if a == T:
            return self.g_or(c, b)
        if a == F:
            return self.g_and(-c, b)
        if b == T:
            return self.g_or(-c, a)
        if b == F:
            return self.g_and(c, a)
        if a == -b:
            return self.g_xor(c, b)
        if c < 0:
            c, a, b = -c, b, a
        key = ('ite', c, a, b)
        out = self.gates.get(key)
        if out is None:
            out = self.sink.new_var()
            self._clause(-c, -a, out)
            self._clause(-c, a, -out)
            self._clause(c, -b, out)
            self._clause(c, b, -out)
            self._clause(-a, -b, out)
            self._clause(a, b, -out)
            self.gates[key] = out
        return out

    def g_and_n(self, lits):
        T, F = self.T, self.F
        kept = []
        seen = set()
        for lit in lits:
            if lit == F or -lit in seen:
                return F
            if lit == T or lit in seen:
                continue
            seen.add(lit)
            kept.append(lit)
        if not kept:
            return T
        if len(kept) == 1:
            return kept[0]
        if len(kept) == 2:
            return self.g_and(kept[0], kept[1])
        key = ('andn',) + tuple(sorted(kept))
        out = self.gates.get(key)
        if out is None:
            out = self.sink.new_var()
            for lit in kept:
                self._clause(-out, lit)
            self._clause(out, *[-lit for lit in kept])
            self.gates[key] = out
        return out

    def g_or_n(self, lits):
        return -self.g_and_n([-lit for lit in lits])

    # Word-level circuits

    def const_bits(self, value, width):
        return [self.T if (value >> i) & 1 else self.F for i in range(width)]

    def adder(self, xs, ys, carry):
        out = []
        for x, y in zip(xs, ys):
            t = self.g_xor(x, y)
            out.append(self.g_xor(t, carry))
            carry = self.g_or(self.g_and(x, y), self.g_and(carry, t))
        return out

    def negate(self, xs):
        return self.adder([-x for x in xs], [self.F] * len(xs), self.T)

    def subtract(self, xs, ys):
        return self.adder(xs, [-y for y in ys], self.T)

    def multiply(self, xs, ys):
        width = len(xs)
        acc = [self.F] * width
        for i, y in enumerate(ys):
            if y == self.F:
                continue
            partial = [self.F] * i + [self.g_and(y, x) for x in xs[:width - i]]
            acc = self.adder(acc, partial, self.F)
        return acc

    def less_than(self, xs, ys):
        lt = self.F
        for x, y in zip(xs, ys):
            lt = self.g_ite(self.g_xor(x, y), y, lt)
        return lt

    def signed_less_than(self, xs, ys):
        return self.less_than(xs[:-1] + [-xs[-1]], ys[:-1] + [-ys[-1]])

    def equal_bits(self, xs, ys):
        return self.g_and_n([-self.g_xor(x, y) for x, y in zip(xs, ys)])

    def equal_const(self, xs, value):
        if value >> len(xs):
            return self.F
        return self.equal_bits(xs, self.const_bits(value, len(xs)))

    def mux(self, c, xs, ys):
        return [self.g_ite(c, x, y) for x, y in zip(xs, ys)]

    # Terms

    def blast(self, term):
        cache = self.cache
        stack = [(term, False)]
        while stack:
            node, expanded = stack.pop()
            if node.tid in cache:
                continue
            if expanded:
                cache[node.tid] = self._encode(node)
                continue
            stack.append((node, True))
            for child in node.args:
                if child.tid not in cache:
                    stack.append((child, False))
        return cache[term.tid]

    def literal(self, term):
        if not term.sort.is_bool:
            raise WidthMismatch(f'expected a Boolean term, got {term.sort}')
        return self.blast(term)

    def _encode(self, node):
        op = node.op
        sort = node.sort
        args = [self.cache[a.tid] for a in node.args]
        if op == 'const':
            if sort.is_bool:
                return self.T if node.payload else self.F
            return self.const_bits(node.payload, sort.width)
        if op == 'addr':
            return self.const_bits(node.payload, sort.width)
        if op == 'aconst':
            return [self.const_bits(v, sort.width) for v in node.payload]
        if op == 'symbol':
            if sort.is_bool:
                return self.sink.new_var()
            if sort.is_array:
                return [[self.sink.new_var() for _ in range(sort.width)] for _ in range(sort.length)]
            return [self.sink.new_var() for _ in range(sort.width)]
        if op == 'not':
            return -args[0]
        if op == 'and':
            return self.g_and_n(args)
        if op == 'or':
            return self.g_or_n(args)
        if op == 'eq':
            a_sort = node.args[0].sort
            if a_sort.is_bool:
                return -self.g_xor(args[0], args[1])
            if a_sort.is_array:
                return self.g_and_n([self.equal_bits(x, y) for x, y in zip(args[0], args[1])])
            return self.equal_bits(args[0], args[1])
        if op == 'ite':
            c, a, b = args
            if sort.is_bool:
                return self.g_ite(c, a, b)
            if sort.is_array:
                return [self.mux(c, x, y) for x, y in zip(a, b)]
            return self.mux(c, a, b)
        if op == 'add':
            return self.adder(args[0], args[1], self.F)
        if op == 'sub':
            return self.subtract(args[0], args[1])
        if op == 'neg':
            return self.negate(args[0])
        if op == 'mul':
            return self.multiply(args[0], args[1])
        if op == 'ult':
            return self.less_than(args[0], args[1])
        if op == 'ule':
            return -self.less_than(args[1], args[0])
        if op == 'slt':
            return self.signed_less_than(args[0], args[1])
        if op == 'sle':
            return -self.signed_less_than(args[1], args[0])
        if op == 'zext':
            return args[0] + [self.F] * (sort.width - len(args[0]))
        if op == 'sext':
            return args[0] + [args[0][-1]] * (sort.width - len(args[0]))
        if op == 'trunc':
            return args[0][:sort.width]
        if op == 'select':
            arr, index = args
            result = [self.F] * sort.width
            for j, element in enumerate(arr):
                hit = self.equal_const(index, j)
                if hit == self.F:
                    continue
                result = self.mux(hit, element, result)
            return result
        if op == 'store':
            arr, index, value = args
            return [self.mux(self.equal_const(index, j), value, element)
                    for j, element in enumerate(arr)]
        raise ValueError(f'cannot bit-blast operator {op}')
