"""
Grammar module for model universe specs, e.g. "size<=3 & forced=1"
"""
from lark import Transformer, v_args

grammar = r"""
start: constraint ("&" constraint)*

?constraint: "all"                       -> all_
           | "size" "<=" INT             -> max_size
           | "size" ">" "p" "-" INT      -> min_size
           | "forced" "=" INT ("," INT)* -> forced
           | "nested"                    -> nested
           | "file" "=" PATH             -> file
           | "vif" "<=" NUMBER           -> vif

PATH: /[^&\s]+/

%import common.INT
%import common.NUMBER
%import common.WS
%ignore WS
"""


@v_args(inline=True)
class UniverseTransformer(Transformer):
    """
    Converts a parsed universe spec into a list of (kind, argument) pairs.
    The pairs are turned into constraints by ModelUniverse.parse
    """

    def start(self, *constraints):
        return list(constraints)

    def all_(self):
        return ('all', None)

    def max_size(self, m):
        return ('max_size', int(m))

    def min_size(self, m):
        return ('min_size', int(m))

    def forced(self, *indices):
        return ('forced', tuple(int(i) for i in indices))

    def nested(self):
        return ('nested', None)

    def file(self, path):
        return ('file', str(path))

    def vif(self, c):
        return ('vif', float(c))
