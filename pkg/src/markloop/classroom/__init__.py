from .analytics import MasteryCell, flag_attention, mastery_cell_doc, performance_overview, slope
from .authoring import (
    Authoring,
    CurriculumDoc,
    CurriculumStore,
    Quiz,
    curriculum_doc_doc,
    curriculum_doc_from,
    quiz_doc,
    quiz_from_doc,
)
from .groups import (
    DEFAULT_PERMISSIONS,
    Directory,
    StudentGroup,
    User,
    create_group,
    group_doc,
    group_from_doc,
    is_allowed,
    require,
    update_membership,
)

__all__ = [
    "Authoring",
    "CurriculumDoc",
    "CurriculumStore",
    "DEFAULT_PERMISSIONS",
    "Directory",
    "MasteryCell",
    "Quiz",
    "StudentGroup",
    "User",
    "create_group",
    "curriculum_doc_doc",
    "curriculum_doc_from",
    "flag_attention",
    "group_doc",
    "group_from_doc",
    "is_allowed",
    "mastery_cell_doc",
    "performance_overview",
    "quiz_doc",
    "quiz_from_doc",
    "require",
    "slope",
    "update_membership",
]
