"""Fixed-attribute-order classification tree and its flattened rules.

The tree is a stratification, not an induced CART: the split sequence
is prescribed (normally the statistical selection order) and every
internal node at depth d splits on ordered_attrs[d] with one child per
level.  Leaves carry the majority class of their cell; empty cells
become backoff leaves that inherit the parent's majority.

Rules render in a fixed text grammar, one block per rule:

    Rule 1: Attr=Level ^ Attr=Level ^ ...
     ConsequentClass

and the grammar round-trips: parse(render(rules)) == rules.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .data import AttributeSchema, Dataset, InputError, SchemaError

CONDITION_JOINER = " ^ "


@dataclass(frozen=True)
class TreeNode:
    majority_class: int
    support: int
    class_counts: tuple[int, ...]
    children: tuple["TreeNode", ...] | None = None
    backoff: bool = False

    @property
    def is_leaf(self) -> bool:
        return self.children is None


@dataclass(frozen=True)
class Rule:
    conditions: tuple[tuple[str, str], ...]  # (attribute, level) name pairs
    consequent: str
    support: int = 0
    confidence: float | None = None
    backoff: bool = False


@dataclass(frozen=True)
class RuleMatch:
    class_index: int
    rule: Rule
    backoff: bool


@dataclass(frozen=True)
class RuleTree:
    schema: AttributeSchema
    ordered_attrs: tuple[str, ...]
    root: TreeNode

    @property
    def class_levels(self) -> tuple[str, ...]:
        return self.schema.class_attribute.levels

    def classify(self, record) -> RuleMatch:
        """Descend by the record's levels; backoff leaves return the
        deepest non-empty ancestor's majority with the flag set."""
        record = np.asarray(record, dtype=np.int64)
        if record.shape != (len(self.schema.attributes),):
            raise InputError(
                f"record must have {len(self.schema.attributes)} level indices"
            )
        node = self.root
        conditions: list[tuple[str, str]] = []
        depth = 0
        while not node.is_leaf:
            attr = self.schema.attribute(self.ordered_attrs[depth])
            level = int(record[self.schema.index(attr.name)])
            if not 0 <= level < attr.n_levels:
                raise InputError(
                    f"record level {level} out of range for {attr.name!r}"
                )
            conditions.append((attr.name, attr.levels[level]))
            node = node.children[level]
            depth += 1
        rule = Rule(
            conditions=tuple(conditions),
            consequent=self.class_levels[node.majority_class],
            support=node.support,
            confidence=(
                node.class_counts[node.majority_class] / node.support
                if node.support
                else None
            ),
            backoff=node.backoff,
        )
        return RuleMatch(node.majority_class, rule, node.backoff)

    def classify_many(self, records: np.ndarray) -> np.ndarray:
        records = np.atleast_2d(records)
        return np.array(
            [self.classify(records[i]).class_index for i in range(records.shape[0])],
            dtype=np.int64,
        )

    def to_json_dict(self) -> dict:
        def encode(node: TreeNode, depth: int) -> dict:
            doc = {
                "majority": self.class_levels[node.majority_class],
                "support": node.support,
                "class_counts": list(node.class_counts),
                "backoff": node.backoff,
            }
            if not node.is_leaf:
                attr = self.schema.attribute(self.ordered_attrs[depth])
                doc["split_attr"] = attr.name
                doc["children"] = {
                    attr.levels[i]: encode(child, depth + 1)
                    for i, child in enumerate(node.children)
                }
            return doc

        return {
            "schema_hash": self.schema.hash(),
            "ordered_attrs": list(self.ordered_attrs),
            "class_levels": list(self.class_levels),
            "root": encode(self.root, 0),
        }

    def save(self, path: str | Path) -> None:
        Path(path).write_text(
            json.dumps(self.to_json_dict(), indent=2) + "\n", encoding="utf-8"
        )

    @classmethod
    def from_json_dict(cls, doc: dict, schema: AttributeSchema) -> "RuleTree":
        if doc.get("schema_hash") != schema.hash():
            raise SchemaError("tree artifact was built against a different schema")
        ordered = tuple(doc["ordered_attrs"])
        class_levels = schema.class_attribute.levels

        def decode(node_doc: dict, depth: int) -> TreeNode:
            children = None
            if "children" in node_doc:
                attr = schema.attribute(ordered[depth])
                children = tuple(
                    decode(node_doc["children"][lvl], depth + 1)
                    for lvl in attr.levels
                )
            return TreeNode(
                majority_class=class_levels.index(node_doc["majority"]),
                support=int(node_doc["support"]),
                class_counts=tuple(node_doc["class_counts"]),
                children=children,
                backoff=bool(node_doc["backoff"]),
            )

        return cls(schema, ordered, decode(doc["root"], 0))

    @classmethod
    def load(cls, path: str | Path, schema: AttributeSchema) -> "RuleTree":
        return cls.from_json_dict(
            json.loads(Path(path).read_text(encoding="utf-8")), schema
        )


def build_tree(
    data: Dataset,
    ordered_attrs: list[str],
    min_support: int = 1,
    max_depth: int | None = None,
) -> RuleTree:
    """Partition the dataset in the given attribute order.

    A branch becomes a leaf when its records are pure, when the depth
    limit is reached, when the cell is empty (backoff leaf carrying the
    parent's majority, support 0), or when support falls below
    min_support.
    """
    if len(data) == 0:
        raise InputError("cannot build a tree from an empty dataset")
    schema = data.schema
    class_name = schema.class_attribute.name
    if class_name in ordered_attrs:
        raise InputError("the class attribute cannot appear in the split order")
    if len(set(ordered_attrs)) != len(ordered_attrs):
        raise InputError("split attributes must be distinct")
    for name in ordered_attrs:
        schema.attribute(name)
    k = schema.class_attribute.n_levels
    classes = data.class_column()
    depth_cap = len(ordered_attrs)
    if max_depth is not None:
        depth_cap = min(depth_cap, max_depth)

    def build(indices: np.ndarray, depth: int, parent_majority: int) -> TreeNode:
        support = len(indices)
        if support == 0:
            return TreeNode(
                majority_class=parent_majority,
                support=0,
                class_counts=(0,) * k,
                backoff=True,
            )
        counts = np.bincount(classes[indices], minlength=k)
        majority = int(np.argmax(counts))  # argmax keeps the lowest index on ties
        pure = int(counts[majority]) == support
        if pure or depth >= depth_cap or support < min_support:
            return TreeNode(majority, support, tuple(int(c) for c in counts))
        ai = schema.index(ordered_attrs[depth])
        col = data.records[indices, ai]
        children = tuple(
            build(indices[col == lvl], depth + 1, majority)
            for lvl in range(schema.attributes[ai].n_levels)
        )
        return TreeNode(majority, support, tuple(int(c) for c in counts), children)

    root = build(np.arange(len(data)), 0, int(np.argmax(np.bincount(classes, minlength=k))))
    return RuleTree(schema, tuple(ordered_attrs), root)


def extract_rules(tree: RuleTree, include_backoff: bool = False) -> list[Rule]:
    """One rule per leaf, depth-first in level-index order.

    Backoff (empty-cell) leaves are skipped unless include_backoff.
    """
    rules: list[Rule] = []

    def walk(node: TreeNode, depth: int, conditions: tuple[tuple[str, str], ...]):
        if node.is_leaf:
            if node.support > 0 or (include_backoff and node.backoff):
                rules.append(
                    Rule(
                        conditions=conditions,
                        consequent=tree.class_levels[node.majority_class],
                        support=node.support,
                        confidence=(
                            node.class_counts[node.majority_class] / node.support
                            if node.support
                            else None
                        ),
                        backoff=node.backoff,
                    )
                )
            return
        attr = tree.schema.attribute(tree.ordered_attrs[depth])
        for i, child in enumerate(node.children):
            walk(child, depth + 1, conditions + ((attr.name, attr.levels[i]),))

    walk(tree.root, 0, ())
    return rules


def render_rule(rule: Rule, number: int) -> str:
    head = f"Rule {number}:"
    if rule.conditions:
        head += " " + CONDITION_JOINER.join(f"{a}={l}" for a, l in rule.conditions)
    return f"{head}\n {rule.consequent}"


def render_rules(rules: list[Rule]) -> str:
    return "\n\n".join(render_rule(r, i) for i, r in enumerate(rules, start=1)) + "\n"


_RULE_RE = re.compile(r"^Rule (\d+):(?: (.*))?\n (.+)$")


def parse_rules(text: str) -> list[Rule]:
    """Inverse of render_rules; support/confidence are not part of the
    text format and come back as 0/None."""
    rules = []
    blocks = [b for b in text.strip("\n").split("\n\n") if b.strip()]
    for block in blocks:
        m = _RULE_RE.match(block)
        if not m:
            raise InputError(f"unparseable rule block: {block!r}")
        cond_text = m.group(2) or ""
        conditions = []
        if cond_text:
            for part in cond_text.split(CONDITION_JOINER):
                attr, sep, level = part.partition("=")
                if not sep:
                    raise InputError(f"bad condition {part!r} (expected Attr=Level)")
                conditions.append((attr, level))
        rules.append(Rule(tuple(conditions), m.group(3)))
    return rules


def rules_to_json_dict(rules: list[Rule]) -> dict:
    return {
        "rules": [
            {
                "number": i,
                "conditions": [
                    {"attribute": a, "level": l} for a, l in rule.conditions
                ],
                "consequent": rule.consequent,
                "support": rule.support,
                "confidence": rule.confidence,
                "backoff": rule.backoff,
            }
            for i, rule in enumerate(rules, start=1)
        ]
    }


def save_rules(rules: list[Rule], text_path: str | Path, json_path: str | Path | None = None) -> None:
    Path(text_path).write_text(render_rules(rules), encoding="utf-8")
    if json_path is not None:
        Path(json_path).write_text(
            json.dumps(rules_to_json_dict(rules), indent=2) + "\n", encoding="utf-8"
        )
