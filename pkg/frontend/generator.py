"""
Seeded random MiniC programs for differential and soundness tests.

Programs are small and always terminate: every loop is a counting loop
over a dedicated counter the body never writes. Assumes appear only at
the start of main. With `heap` a single object is allocated before any
loop and then read and written through pointers.
"""

import random

NUMERIC_TYPES = ('int', 'char', 'unsigned char', 'short', 'unsigned')
NONDET = {
    'int': '__VERIFIER_nondet_int',
    'char': '__VERIFIER_nondet_char',
    'unsigned char': '__VERIFIER_nondet_uchar',
    'short': '__VERIFIER_nondet_short',
    'unsigned': '__VERIFIER_nondet_uint',
}


class ProgramGenerator:

    def __init__(self, seed=0, variables=3, statements=6, max_depth=2, max_trip=3, heap=False,
                 pointers=True):
        self.rng = random.Random(seed)
        self.variables = variables
        self.statements = statements
        self.max_depth = max_depth
        self.max_trip = max_trip
        self.heap = heap
        self.pointers = pointers
        self.names = []
        self.targets = []
        self.counters = 0
        self.lines = []

    def emit(self, depth, text):
        self.lines.append('    ' * (depth + 1) + text)

    # Expressions

    def atom(self):
        if self.rng.random() < 0.35:
            return str(self.rng.randint(-3, 5))
        return self.rng.choice(self.names)

    def expr(self, depth=0):
        roll = self.rng.random()
        if depth >= 2 or roll < 0.35:
            return self.atom()
        if roll < 0.8:
            op = self.rng.choice(['+', '-', '*', '+', '-'])
            return f'({self.expr(depth + 1)} {op} {self.expr(depth + 1)})'
        cond = self.condition(depth + 1)
        return f'({cond} ? {self.expr(depth + 1)} : {self.expr(depth + 1)})'

    def condition(self, depth=0):
        op = self.rng.choice(['<', '<=', '==', '!=', '>', '>='])
        text = f'{self.expr(depth + 1)} {op} {self.expr(depth + 1)}'
        if depth == 0 and self.rng.random() < 0.2:
            other = self.rng.choice(['&&', '||'])
            text = f'({text}) {other} ({self.condition(depth + 1)})'
        return text

    # Statements

    def statement(self, depth):
        roll = self.rng.random()
        if roll < 0.45 or depth >= self.max_depth:
            self.emit(depth, f'{self.rng.choice(self.names)} = {self.expr()};')
        elif roll < 0.6:
            self.emit(depth, f'assert({self.condition()});')
        elif roll < 0.8:
            self.emit(depth, f'if ({self.condition()}) {{')
            self.block(depth + 1)
            if self.rng.random() < 0.5:
                self.emit(depth, '} else {')
                self.block(depth + 1)
            self.emit(depth, '}')
        else:
            self.counters += 1
            counter = f'k{self.counters}'
            trip = self.rng.randint(0, self.max_trip)
            self.emit(depth, f'for (int {counter} = 0; {counter} < {trip}; {counter}++) {{')
            self.block(depth + 1)
            self.emit(depth, '}')
        if self.pointers and self.targets and self.rng.random() < 0.15:
            target = self.rng.choice(self.targets)
            self.emit(depth, f'p = &{target};')
            self.emit(depth, f'*p = {self.expr()};')
        if self.heap and self.rng.random() < 0.2:
            self.emit(depth, f'h->val = {self.expr()};')
            self.emit(depth, f'{self.rng.choice(self.names)} = h->val;')

    def block(self, depth):
        for _ in range(self.rng.randint(1, 3)):
            self.statement(depth)

    def generate(self):
        types = [self.rng.choice(NUMERIC_TYPES) for _ in range(self.variables)]
        self.names = [f'v{i}' for i in range(self.variables)]
        head = []
        if self.heap:
            head.append('struct cell { struct cell *next; int val; };')
        head.append('int main() {')
        for name, t in zip(self.names, types):
            self.emit(0, f'{t} {name} = {NONDET[t]}();')
        if self.pointers:
            self.emit(0, 'int *p = 0;')
            self.targets = [n for n, t in zip(self.names, types) if t == 'int']
        if self.rng.random() < 0.5:
            self.emit(0, f'__CPROVER_assume({self.condition(1)});')
        if self.heap:
            self.emit(0, 'struct cell *h = malloc(sizeof(struct cell));')
            self.emit(0, 'h->next = 0;')
        for _ in range(self.statements):
            self.statement(0)
        if self.heap and self.rng.random() < 0.5:
            self.emit(0, 'free(h);')
        self.emit(0, 'return 0;')
        return '\n'.join(head + self.lines + ['}']) + '\n'


def random_program(seed, **options):
    """Source text of one random terminating MiniC program."""
    return ProgramGenerator(seed, **options).generate()
