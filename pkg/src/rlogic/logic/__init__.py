from .evaluator import (Assignment, CompiledFormula, EvaluationError, NotADefinitionError,
                        ResourceLimitError, UnboundVariableError, compile_formula,
                        defines_linear_order, element_defined_by, evaluate, is_linear_order,
                        naive_evaluate, query)
from .parser import ArityError, FormulaSyntaxError, FreeSetVariableWarning, parse, to_text
from .syntax import (And, Atom, CountExists, Eq, Exists, ExistsSet, Forall, ForallSet, Formula,
                     FormulaError, Iff, Implies, Not, Or, Rescher, SetMember, atom, conj, disj,
                     exists, forall, free_vars, map_atoms, quantifier_rank, rename_symbols,
                     symbol_arities, variables, vocabulary_of)
