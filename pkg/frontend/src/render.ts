// Pure HTML renderers. Every function returns a string so components are
// testable without a DOM; main.ts assigns the results to innerHTML.

import type {
  AssessmentDoc,
  AttentionFlagDoc,
  ChatTurn,
  FeedbackEnvelope,
  FeedbackVersionDoc,
  MasteryCellDoc,
  ReviseResponse,
  VerificationDoc,
} from "./types.js";

export function esc(text: string): string {
  return text
    .replaceAll("&", "&amp;")
    .replaceAll("<", "&lt;")
    .replaceAll(">", "&gt;")
    .replaceAll('"', "&quot;");
}

// 0 -> red, 1 -> blue, linear in between.
export function heatColour(mean: number): string {
  const clamped = Math.max(0, Math.min(1, mean));
  const red = Math.round(255 * (1 - clamped));
  const blue = Math.round(255 * clamped);
  return `rgb(${red}, 64, ${blue})`;
}

export function trendMarker(trend: number): string {
  if (trend > 0.01) return "↑";
  if (trend < -0.01) return "↓";
  return "→";
}

export function renderScoreBadges(verification: VerificationDoc | null): string {
  if (!verification) return "";
  const badges = Object.entries(verification.scores)
    .map(
      ([name, score]) =>
        `<span class="badge score-badge" data-criterion="${esc(name)}" ` +
        `title="${esc(verification.justifications[name] ?? "")}">` +
        `${esc(name)}: ${score}/5</span>`,
    )
    .join("");
  return `<div class="score-badges">${badges}</div>`;
}

function weightByConcept(assessment: AssessmentDoc | null | undefined): Map<string, number> {
  const weights = new Map<string, number>();
  for (const concept of assessment?.concepts ?? []) {
    weights.set(concept.concept_id, concept.weight);
  }
  return weights;
}

function maxMarks(assessment: AssessmentDoc | null | undefined,
                  feedback: FeedbackVersionDoc): number {
  const concepts = assessment?.concepts;
  if (concepts && concepts.length > 0) {
    return concepts.reduce((sum, c) => sum + c.weight, 0);
  }
  return feedback.items.reduce((sum, item) => sum + item.awarded_mark, 0);
}

export function renderFeedbackItems(feedback: FeedbackVersionDoc,
                                    assessment?: AssessmentDoc | null): string {
  const weights = weightByConcept(assessment);
  const rows = feedback.items
    .map((item) => {
      const possible = weights.get(item.concept_id);
      const marks = possible === undefined
        ? `${item.awarded_mark}`
        : `${item.awarded_mark}/${possible}`;
      return (
        `<li class="feedback-item">` +
        `<span class="item-mark">Mark: ${marks}</span> ` +
        `<span class="item-comment">${esc(item.comment)}</span></li>`
      );
    })
    .join("");
  return `<ul class="feedback-items">${rows}</ul>`;
}

// Student-facing panel: marks, total, score badges, and the expression note
// rendered outside the marks list so it reads as advice, not a deduction.
export function renderStudentFeedback(envelope: FeedbackEnvelope): string {
  if (envelope.status === "pending") {
    return `<div class="pending" data-poll="true">` +
      `<span class="spinner"></span> Generating your feedback…</div>`;
  }
  if (envelope.status === "pending_review") {
    return `<div class="pending-review">Your feedback is pending review by ` +
      `your teacher.</div>`;
  }
  if (envelope.status === "failed") {
    return `<div class="error">Feedback could not be generated. ` +
      `Your teacher has been notified.</div>`;
  }
  const feedback = envelope.feedback;
  if (!feedback) return `<div class="error">No feedback available.</div>`;
  const total = `${feedback.total_mark}/${maxMarks(envelope.assessment, feedback)}`;
  const note = envelope.expression_note
    ? `<div class="expression-note">${esc(envelope.expression_note)}</div>`
    : "";
  return (
    `<section class="feedback-panel">` +
    renderFeedbackItems(feedback, envelope.assessment) +
    `<div class="total-mark">Total mark: <strong>${total}</strong></div>` +
    renderScoreBadges(feedback.verification) +
    `</section>` +
    note
  );
}

// Teacher-facing panel: withheld drafts stay visible behind a banner.
export function renderTeacherFeedback(envelope: FeedbackEnvelope): string {
  if (envelope.status === "pending") {
    return `<div class="pending" data-poll="true">Pipeline running…</div>`;
  }
  if (envelope.status === "failed") {
    return `<div class="error">Pipeline failed: ${esc(envelope.error ?? "unknown")}</div>`;
  }
  const feedback = envelope.feedback;
  if (!feedback) return `<div class="error">No feedback recorded.</div>`;
  const banner = feedback.safety_passed
    ? ""
    : `<div class="banner withheld-banner">Withheld from the student by the ` +
      `safety gate. Notes: ${esc(feedback.safety_notes.join("; "))}</div>`;
  const total = `${feedback.total_mark}/${maxMarks(envelope.assessment, feedback)}`;
  return (
    banner +
    `<section class="feedback-panel" data-version="${esc(feedback.id)}">` +
    renderFeedbackItems(feedback, envelope.assessment) +
    `<div class="total-mark">Total mark: <strong>${total}</strong></div>` +
    renderScoreBadges(feedback.verification) +
    `<div class="provenance">Loop iterations: ${feedback.provenance.length}, ` +
    `returned iterate t=${feedback.iteration}, origin ${esc(feedback.origin)}</div>` +
    `</section>`
  );
}

export function renderHeatmap(cells: MasteryCellDoc[]): string {
  if (cells.length === 0) {
    return `<div class="empty">No assessed answers yet.</div>`;
  }
  const students = [...new Set(cells.map((c) => c.student_id))].sort();
  const topics = [...new Set(cells.map((c) => c.topic_id))].sort();
  const byKey = new Map(cells.map((c) => [`${c.student_id}|${c.topic_id}`, c]));
  const header =
    `<tr><th></th>` + topics.map((t) => `<th>${esc(t)}</th>`).join("") + `</tr>`;
  const body = students
    .map((student) => {
      const row = topics
        .map((topic) => {
          const cell = byKey.get(`${student}|${topic}`);
          if (!cell) return `<td class="heat-cell empty"></td>`;
          const pct = Math.round(cell.mean_normalised_score * 100);
          return (
            `<td class="heat-cell" style="background:${heatColour(cell.mean_normalised_score)}" ` +
            `title="${pct}% over ${cell.attempts} attempt(s)">` +
            `${pct}% ${trendMarker(cell.trend)}</td>`
          );
        })
        .join("");
      return `<tr><th>${esc(student)}</th>${row}</tr>`;
    })
    .join("");
  return `<table class="heatmap">${header}${body}</table>`;
}

export function renderAttention(flags: AttentionFlagDoc[]): string {
  if (flags.length === 0) {
    return `<div class="empty">Nothing needs attention.</div>`;
  }
  const rows = flags
    .map(
      (f) =>
        `<li class="attention-flag" data-answer="${esc(f.answer_id)}">` +
        `<button class="link open-answer" data-answer="${esc(f.answer_id)}">` +
        `${esc(f.answer_id)}</button> ${esc(f.reason)}</li>`,
    )
    .join("");
  return `<ul class="attention-list">${rows}</ul>`;
}

export function renderRevisionOutcome(response: ReviseResponse): string {
  const badges = response.revised
    .map(
      (v) =>
        `<span class="badge revised-badge" data-answer="${esc(v.answer_id)}">` +
        `revised ${esc(v.answer_id)}</span>`,
    )
    .join("");
  const failures = response.failures
    .map(
      (f) =>
        `<span class="badge failure-badge">failed ${esc(f.answer_id)}: ` +
        `${esc(f.error)}</span>`,
    )
    .join("");
  return `<div class="revision-outcome">${badges}${failures}</div>`;
}

// Before/after comment text per concept; marks are shown fixed on purpose -
// revision never moves marks, and the UI should make that visible.
export function renderCommentDiff(before: FeedbackVersionDoc,
                                  after: FeedbackVersionDoc): string {
  const rows = before.items
    .map((item, i) => {
      const revised = after.items[i];
      const changed = revised && revised.comment !== item.comment;
      return (
        `<tr class="${changed ? "changed" : "unchanged"}">` +
        `<td class="diff-mark">Mark: ${item.awarded_mark}</td>` +
        `<td class="diff-before">${esc(item.comment)}</td>` +
        `<td class="diff-after">${esc(revised ? revised.comment : "")}</td></tr>`
      );
    })
    .join("");
  return (
    `<table class="comment-diff">` +
    `<tr><th>Mark (fixed)</th><th>Before</th><th>After</th></tr>${rows}</table>`
  );
}

export function renderChat(turns: ChatTurn[]): string {
  const rows = turns
    .map((t) => `<div class="chat-turn ${t.author}">${esc(t.text)}</div>`)
    .join("");
  return `<div class="chat-transcript">${rows}</div>`;
}
