from .seed import (
    BANK_QUESTIONS,
    BANK_SCHEMES,
    CURRICULUM_DOCS,
    PHLOEM_ANSWER_TEXT,
    PHLOEM_COMMENTS,
    PHLOEM_MATCH_REPLY,
    PHLOEM_QUESTION,
    PHLOEM_REVISED_COMMENTS,
    PHLOEM_SCHEME,
    PHLOEM_VERIFY_REPLY,
    TEACHER_SUGGESTIONS,
    TOKENS,
    TOPICS,
    USERS,
    build_corpus,
    demo_rules,
    generic_pipeline_rules,
    phloem_answer,
    phloem_rules,
    topic_map,
    topic_parents,
    write_corpus,
    write_script,
)

__all__ = [
    "BANK_QUESTIONS",
    "BANK_SCHEMES",
    "CURRICULUM_DOCS",
    "PHLOEM_ANSWER_TEXT",
    "PHLOEM_COMMENTS",
    "PHLOEM_MATCH_REPLY",
    "PHLOEM_QUESTION",
    "PHLOEM_REVISED_COMMENTS",
    "PHLOEM_SCHEME",
    "PHLOEM_VERIFY_REPLY",
    "TEACHER_SUGGESTIONS",
    "TOKENS",
    "TOPICS",
    "USERS",
    "build_corpus",
    "demo_rules",
    "generic_pipeline_rules",
    "phloem_answer",
    "phloem_rules",
    "topic_map",
    "topic_parents",
    "write_corpus",
    "write_script",
]
