"""Bundled synthetic fixtures: curriculum, question bank, users, and the
scripted model responses that drive every offline example.

The centrepiece is the phloem-transport fixture: a five-mark question marked
against five one-mark concepts, where the scripted judge credits concepts
2, 4 and 5, the verifier scores the feedback (5, 5, 4), and a teacher
revision rewrites the comments without moving a single mark.
"""

from __future__ import annotations

import json
import random
from pathlib import Path

from ..assessor import prompts as judge_prompts
from ..classroom import CurriculumDoc, User
from ..domain import ConceptCriterion, MarkScheme, Question, StudentAnswer, Topic, utcnow
from ..gateway import ScriptRule, prompt_sha256, rule_doc
from ..metrics import CorpusItem, corpus_item_doc

# -- topics ------------------------------------------------------------------

TOPICS = [
    Topic("bio-cells", "Cell structure", "B1.1"),
    Topic("bio-transport", "Transport across membranes", "B1.3", parent_id="bio-cells"),
    Topic("bio-energy", "Energy in cells", "B4.0"),
    Topic("bio-resp", "Respiration", "B4.2", parent_id="bio-energy"),
    Topic("bio-photo", "Photosynthesis", "B4.1", parent_id="bio-energy"),
]


def topic_map() -> dict[str, Topic]:
    return {t.id: t for t in TOPICS}


def topic_parents() -> dict[str, str | None]:
    return {t.id: t.parent_id for t in TOPICS}


CURRICULUM_DOCS = [
    CurriculumDoc("bio-cells", "GCSE", "Students should know the functions of organelles, "
                  "including mitochondria as the site of aerobic respiration."),
    CurriculumDoc("bio-transport", "GCSE", "Students should explain diffusion, osmosis and "
                  "active transport, including movement against a concentration gradient "
                  "using energy from respiration."),
    CurriculumDoc("bio-energy", "GCSE", "Students should relate energy transfer in cells to "
                  "the reactions of respiration and photosynthesis."),
    CurriculumDoc("bio-resp", "GCSE", "Students should describe aerobic respiration as an "
                  "exothermic reaction releasing energy from glucose, occurring in "
                  "mitochondria."),
    CurriculumDoc("bio-photo", "GCSE", "Students should describe photosynthesis as an "
                  "endothermic reaction in chloroplasts producing glucose and oxygen."),
]

# -- users -------------------------------------------------------------------

USERS = [
    User("t-ada", "teacher", "Ada"),
    User("t-bo", "teacher", "Bo"),
    User("s-kim", "student", "Kim"),
    User("s-lee", "student", "Lee"),
    User("s-raj", "student", "Raj"),
]

TOKENS = {f"token-{u.id}": u.id for u in USERS}

# -- the phloem-transport golden fixture --------------------------------------

PHLOEM_QUESTION = Question(
    id="q-phloem",
    prompt_text=(
        "Cell X loads sugars into the phloem. Explain how the sugars are moved "
        "into the phloem and why this process needs energy."
    ),
    topics=frozenset({"bio-transport"}),
    max_marks=5,
    source="bank",
)

PHLOEM_SCHEME = MarkScheme(
    question_id="q-phloem",
    concepts=(
        ConceptCriterion("q-phloem-c1", "States that cell X contains many mitochondria", 1),
        ConceptCriterion(
            "q-phloem-c2",
            "Identifies that sugars move from low concentration in cell X to high "
            "concentration in the phloem, against the concentration gradient",
            1,
        ),
        ConceptCriterion(
            "q-phloem-c3",
            "Explains that mitochondria carry out aerobic respiration to release energy",
            1,
        ),
        ConceptCriterion(
            "q-phloem-c4",
            "Explains that energy is needed to move sugars against the concentration "
            "gradient",
            1,
        ),
        ConceptCriterion("q-phloem-c5", "Names the process as active transport", 1),
    ),
)

PHLOEM_ANSWER_TEXT = (
    "The sugars are moved into the phloem by active transport. This needs energy "
    "because the sugars move from a low concentration to a high concentration, "
    "against the concentration gradient."
)


def phloem_answer(answer_id: str = "a-phloem", student_id: str = "s-kim") -> StudentAnswer:
    return StudentAnswer(
        id=answer_id,
        student_id=student_id,
        question_id="q-phloem",
        text=PHLOEM_ANSWER_TEXT,
        submitted_at=utcnow(),
    )


#: Scripted judge verdicts giving matches [F, T, F, T, T] -> 3/5.
PHLOEM_MATCH_REPLY = "\n".join(
    [
        "1: NO | the answer never mentions mitochondria",
        "2: YES | sugars move from a low concentration to a high concentration",
        "3: NO | respiration is not mentioned anywhere",
        "4: YES | this needs energy because the sugars move against the gradient",
        "5: YES | moved into the phloem by active transport",
    ]
)

PHLOEM_COMMENTS = [
    "State that cell X contains many mitochondria to supply the energy needed "
    "for active transport.",
    "You correctly said that sugars are moved against the concentration gradient, "
    "from cell X into the phloem.",
    "Add that the mitochondria carry out aerobic respiration, which releases the "
    "energy used for active transport.",
    "You correctly explained that energy is needed to move sugars against the "
    "concentration gradient.",
    "You correctly named active transport as the process moving sugars from low "
    "to high concentration.",
]

PHLOEM_REVISED_COMMENTS = [
    "Add: cell X has many mitochondria to power active transport.",
    "Correct: sugars move against the gradient from cell X to the phloem.",
    "Add: mitochondria do aerobic respiration to release that energy.",
    "Correct: energy is needed to move sugars against the gradient.",
    "Correct: active transport moves sugars from low to high concentration.",
]

TEACHER_SUGGESTIONS = (
    "Avoid general advice. Give short, specific instructions a student can act "
    "on. Keep each comment concise."
)

PHLOEM_VERIFY_REPLY = "\n".join(
    [
        "accuracy: 5 | Every statement in the feedback is scientifically sound.",
        "specificity: 5 | Each comment points at exactly what was credited or missing.",
        "clarity: 4 | Mostly plain wording; one sentence could be simpler.",
    ]
)


def _comment_lines(comments: list[str]) -> str:
    return "\n".join(f"{i}: {c}" for i, c in enumerate(comments, start=1))


def phloem_rules() -> list[ScriptRule]:
    """Script covering the whole pipeline for the phloem fixture,
    including a teacher revision pass."""
    answer_key = "moved into the phloem by active transport"
    return [
        ScriptRule(responses=(PHLOEM_MATCH_REPLY,),
                   contains=("TASK: concept-match", answer_key)),
        ScriptRule(responses=("3",), contains=("TASK: holistic-grade", answer_key)),
        ScriptRule(responses=("FINE",), contains=("TASK: expression-check", answer_key)),
        ScriptRule(responses=(_comment_lines(PHLOEM_REVISED_COMMENTS),),
                   contains=("TASK: feedback-generate", answer_key, "TEACHER SUGGESTION")),
        ScriptRule(responses=(_comment_lines(PHLOEM_COMMENTS),),
                   contains=("TASK: feedback-generate", answer_key)),
        ScriptRule(responses=(_comment_lines(PHLOEM_REVISED_COMMENTS),),
                   contains=("TASK: feedback-revise", answer_key)),
        ScriptRule(responses=(PHLOEM_VERIFY_REPLY,),
                   contains=("TASK: feedback-verify", answer_key)),
        ScriptRule(responses=("APPROVE",), contains="TASK: safety-check"),
    ]


def generic_pipeline_rules() -> list[ScriptRule]:
    """Fallback judges so seeded demo answers outside the golden fixture
    still flow through the pipeline deterministically."""
    return [
        ScriptRule(responses=("1: YES | stated in the answer",), contains="TASK: decompose"),
        ScriptRule(responses=("APPROVE",), contains="TASK: safety-check"),
        ScriptRule(responses=(PHLOEM_VERIFY_REPLY,), contains="TASK: feedback-verify"),
    ]


# -- question bank -------------------------------------------------------------

BANK_QUESTIONS: dict[str, list[Question]] = {
    "bio-transport": [PHLOEM_QUESTION],
    "bio-photo": [
        Question(
            id="q-photo",
            prompt_text="Describe how a plant makes glucose and what it needs to do so.",
            topics=frozenset({"bio-photo"}),
            max_marks=4,
            source="bank",
        )
    ],
    "bio-resp": [
        Question(
            id="q-resp",
            prompt_text="Explain why muscle cells contain many mitochondria.",
            topics=frozenset({"bio-resp"}),
            max_marks=3,
            source="bank",
        )
    ],
}

BANK_SCHEMES: dict[str, MarkScheme] = {
    "q-phloem": PHLOEM_SCHEME,
    "q-photo": MarkScheme(
        question_id="q-photo",
        concepts=(
            ConceptCriterion("q-photo-c1", "Names the process as photosynthesis", 1),
            ConceptCriterion("q-photo-c2", "States that light is required", 1),
            ConceptCriterion("q-photo-c3", "States carbon dioxide and water as reactants", 1),
            ConceptCriterion("q-photo-c4", "States it happens in chloroplasts", 1),
        ),
    ),
    "q-resp": MarkScheme(
        question_id="q-resp",
        concepts=(
            ConceptCriterion("q-resp-c1", "Muscle cells need a large energy supply", 1),
            ConceptCriterion("q-resp-c2", "Mitochondria are the site of aerobic respiration", 1),
            ConceptCriterion("q-resp-c3", "Respiration releases energy from glucose", 1),
        ),
    ),
}

# -- synthetic evaluation corpus ------------------------------------------------


def build_corpus(n: int = 100, seed: int = 2024) -> tuple[list[CorpusItem], list[ScriptRule]]:
    """A corpus of n variants of the five-mark question plus the scripted
    judge responses that score them.

    Each item gets a unique answer text; the scripted judge credits a noisy
    subset of concepts so predictions differ from gold in a controlled way.
    Script rules key on the exact prompt hash, exercising the same matching
    path a recorded script file would use.
    """
    rng = random.Random(seed)
    items: list[CorpusItem] = []
    rules: list[ScriptRule] = []
    facets = [
        "mentions mitochondria",
        "names the concentration gradient",
        "mentions respiration",
        "links energy to transport",
        "names active transport",
    ]
    for i in range(n):
        item_id = f"case-{i:03d}"
        answer_text = (
            f"Sample answer {item_id}: the student discusses sugar loading "
            f"variant {rng.randint(1000, 9999)} and {rng.choice(facets)}."
        )
        question = Question(
            id=f"q-{item_id}",
            prompt_text=PHLOEM_QUESTION.prompt_text,
            topics=PHLOEM_QUESTION.topics,
            max_marks=5,
            source="bank",
        )
        scheme = MarkScheme(
            question_id=question.id,
            concepts=tuple(
                ConceptCriterion(f"q-{item_id}-c{k}", c.description, c.weight)
                for k, c in enumerate(PHLOEM_SCHEME.concepts, start=1)
            ),
        )
        answer = StudentAnswer(
            id=f"a-{item_id}",
            student_id=f"s-{i % 7}",
            question_id=question.id,
            text=answer_text,
            submitted_at=utcnow(),
        )
        gold = rng.randint(0, 5)
        noise = rng.choice([-1, 0, 0, 0, 1])
        predicted = max(0, min(5, gold + noise))
        mask = [True] * predicted + [False] * (5 - predicted)
        rng.shuffle(mask)
        match_reply = "\n".join(
            f"{k}: {'YES' if hit else 'NO'} | scripted verdict"
            for k, hit in enumerate(mask, start=1)
        )
        items.append(CorpusItem(item_id, question, scheme, answer, gold))
        rules.append(ScriptRule(
            responses=(match_reply,),
            prompt_sha256=prompt_sha256(judge_prompts.match_prompt(question, scheme, answer)),
        ))
        rules.append(ScriptRule(
            responses=(str(predicted),),
            prompt_sha256=prompt_sha256(judge_prompts.grade_prompt(question, scheme, answer)),
        ))
        rules.append(ScriptRule(
            responses=("FINE",),
            prompt_sha256=prompt_sha256(judge_prompts.expression_prompt(answer)),
        ))
    return items, rules


def write_corpus(path: str | Path, n: int = 100, seed: int = 2024) -> Path:
    items, rules = build_corpus(n, seed)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [json.dumps(corpus_item_doc(item), sort_keys=True) for item in items]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    script_path = path.with_name(path.stem + "-script.json")
    write_script(script_path, rules)
    return script_path


def write_script(path: str | Path, rules: list[ScriptRule], default: str | None = None) -> None:
    doc = {"rules": [rule_doc(r) for r in rules]}
    if default is not None:
        doc["default"] = default
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True), encoding="utf-8")


def demo_rules() -> list[ScriptRule]:
    """Everything the seeded demo needs: golden fixture plus fallbacks."""
    return phloem_rules() + generic_pipeline_rules()
