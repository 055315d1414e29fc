"""Student groups, the user directory, and the permission matrix.

Access control is deliberately dumb: an action is allowed only when the
group's permission matrix grants it to the requester's role AND the requester
is a member of that group in that role. Student data additionally requires
ownership. There is no way to reach another group's data through any helper
here, which is what the permission-closure property test leans on.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from ..errors import NoTeacher, PermissionDenied, UnknownUser, ValidationError

TEACHER_ACTIONS = (
    "manage_group",
    "manage_quizzes",
    "view_answers",
    "view_feedback",
    "revise_feedback",
    "view_analytics",
)
STUDENT_ACTIONS = (
    "view_quiz",
    "submit_answer",
    "view_own_feedback",
)

DEFAULT_PERMISSIONS: dict[str, tuple[str, ...]] = {
    "teacher": TEACHER_ACTIONS,
    "student": STUDENT_ACTIONS,
}


@dataclass(frozen=True)
class User:
    id: str
    role: str
    name: str = ""

    def __post_init__(self) -> None:
        if self.role not in ("teacher", "student"):
            raise ValidationError(f"unknown user role {self.role!r}")


@dataclass(frozen=True)
class StudentGroup:
    id: str
    subject: str
    year_level: int
    teacher_ids: frozenset[str]
    student_ids: frozenset[str]
    permissions: dict[str, tuple[str, ...]] = field(
        default_factory=lambda: dict(DEFAULT_PERMISSIONS)
    )

    def __post_init__(self) -> None:
        object.__setattr__(self, "teacher_ids", frozenset(self.teacher_ids))
        object.__setattr__(self, "student_ids", frozenset(self.student_ids))
        object.__setattr__(
            self, "permissions", {k: tuple(v) for k, v in self.permissions.items()}
        )
        if not self.teacher_ids:
            raise NoTeacher(f"group {self.id!r} has no teacher")


class Directory:
    """Known users; group membership must reference them."""

    def __init__(self, users: list[User] | None = None):
        self._users: dict[str, User] = {}
        for u in users or []:
            self.add(u)

    def add(self, user: User) -> None:
        self._users[user.id] = user

    def get(self, user_id: str) -> User:
        user = self._users.get(user_id)
        if user is None:
            raise UnknownUser(f"no user {user_id!r}")
        return user

    def all(self) -> list[User]:
        return list(self._users.values())


def create_group(
    group_id: str,
    subject: str,
    year_level: int,
    teacher_ids: set[str],
    student_ids: set[str],
    directory: Directory,
    permissions: dict[str, tuple[str, ...]] | None = None,
) -> StudentGroup:
    for uid in set(teacher_ids) | set(student_ids):
        directory.get(uid)
    for tid in teacher_ids:
        if directory.get(tid).role != "teacher":
            raise ValidationError(f"user {tid!r} is not a teacher")
    return StudentGroup(
        id=group_id,
        subject=subject,
        year_level=year_level,
        teacher_ids=frozenset(teacher_ids),
        student_ids=frozenset(student_ids),
        permissions=permissions or dict(DEFAULT_PERMISSIONS),
    )


def update_membership(
    group: StudentGroup,
    directory: Directory,
    teacher_ids: set[str] | None = None,
    student_ids: set[str] | None = None,
) -> StudentGroup:
    return create_group(
        group.id,
        group.subject,
        group.year_level,
        set(teacher_ids if teacher_ids is not None else group.teacher_ids),
        set(student_ids if student_ids is not None else group.student_ids),
        directory,
        permissions=dict(group.permissions),
    )


def is_allowed(
    user: User,
    action: str,
    group: StudentGroup,
    owner_student_id: str | None = None,
) -> bool:
    """Single authorisation predicate used by every data access path."""
    granted = group.permissions.get(user.role, ())
    if action not in granted:
        return False
    if user.role == "teacher":
        return user.id in group.teacher_ids
    if user.id not in group.student_ids:
        return False
    # Students only ever see their own rows.
    return owner_student_id is None or owner_student_id == user.id


def require(
    user: User,
    action: str,
    group: StudentGroup,
    owner_student_id: str | None = None,
) -> None:
    if not is_allowed(user, action, group, owner_student_id):
        raise PermissionDenied(
            f"user {user.id!r} ({user.role}) may not {action!r} in group {group.id!r}"
        )


def group_doc(g: StudentGroup) -> dict:
    return {
        "schema": "student_group/1",
        "id": g.id,
        "subject": g.subject,
        "year_level": g.year_level,
        "teacher_ids": sorted(g.teacher_ids),
        "student_ids": sorted(g.student_ids),
        "permissions": {k: list(v) for k, v in sorted(g.permissions.items())},
    }


def group_from_doc(doc: dict) -> StudentGroup:
    return StudentGroup(
        id=doc["id"],
        subject=doc["subject"],
        year_level=doc["year_level"],
        teacher_ids=frozenset(doc["teacher_ids"]),
        student_ids=frozenset(doc["student_ids"]),
        permissions={k: tuple(v) for k, v in doc["permissions"].items()},
    )
