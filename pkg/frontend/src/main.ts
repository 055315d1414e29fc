// Page controller: login with a bearer token, then route to the teacher
// console or the student view based on the account's role.

import { ApiClient, ApiError, pollFeedback } from "./api.js";
import {
  renderAttention,
  renderChat,
  renderCommentDiff,
  renderHeatmap,
  renderRevisionOutcome,
  renderStudentFeedback,
  renderTeacherFeedback,
} from "./render.js";
import type { ChatTurn, FeedbackVersionDoc, MeResponse } from "./types.js";

const DEMO_QUIZ_ID = "quiz-demo";

const client = new ApiClient();

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function show(id: string): void {
  for (const section of document.querySelectorAll<HTMLElement>("main > section")) {
    section.hidden = section.id !== id;
  }
}

function toast(message: string, isError = false): void {
  const box = el<HTMLDivElement>("toast");
  box.textContent = message;
  box.className = isError ? "toast error" : "toast";
  box.hidden = false;
  setTimeout(() => { box.hidden = true; }, 4000);
}

async function login(): Promise<void> {
  const token = el<HTMLInputElement>("tokenInput").value.trim();
  if (!token) {
    toast("Enter an access token", true);
    return;
  }
  client.setToken(token);
  try {
    const me = await client.me();
    el<HTMLSpanElement>("whoami").textContent = `${me.name || me.id} (${me.role})`;
    if (me.role === "teacher") {
      await showTeacher(me);
    } else {
      await showStudent();
    }
  } catch (err) {
    toast(err instanceof ApiError ? err.message : String(err), true);
  }
}

// -- teacher console ---------------------------------------------------------

let currentAnswerId: string | null = null;
let currentVersion: FeedbackVersionDoc | null = null;
let previousVersion: FeedbackVersionDoc | null = null;
const chatTurns: ChatTurn[] = [];

async function showTeacher(me: MeResponse): Promise<void> {
  show("teacherView");
  const groupId = me.groups[0];
  if (!groupId) {
    toast("This account belongs to no group", true);
    return;
  }
  el<HTMLSpanElement>("teacherGroup").textContent = groupId;
  await refreshTeacherPanels(groupId);
  el<HTMLButtonElement>("refreshBtn").onclick = () => {
    void refreshTeacherPanels(groupId);
  };
  el<HTMLElement>("attentionPanel").addEventListener("click", (event) => {
    const target = event.target as HTMLElement;
    const answerId = target.dataset.answer;
    if (answerId) void openAnswer(answerId);
  });
  el<HTMLButtonElement>("sendSuggestion").onclick = () => {
    void sendSuggestion();
  };
}

async function refreshTeacherPanels(groupId: string): Promise<void> {
  try {
    const [analytics, attention] = await Promise.all([
      client.analytics(groupId),
      client.attention(groupId),
    ]);
    el<HTMLDivElement>("heatmapPanel").innerHTML = renderHeatmap(analytics.cells);
    el<HTMLDivElement>("attentionPanel").innerHTML = renderAttention(attention.flags);
  } catch (err) {
    toast(err instanceof ApiError ? err.message : String(err), true);
  }
}

async function openAnswer(answerId: string): Promise<void> {
  currentAnswerId = answerId;
  const envelope = await client.feedback(answerId);
  currentVersion = envelope.feedback;
  previousVersion = null;
  el<HTMLDivElement>("feedbackDetail").innerHTML = renderTeacherFeedback(envelope);
  el<HTMLDivElement>("diffPanel").innerHTML = "";
  el<HTMLElement>("revisionPanel").hidden = false;
}

async function sendSuggestion(): Promise<void> {
  if (!currentVersion || !currentAnswerId) {
    toast("Open an answer first", true);
    return;
  }
  const input = el<HTMLTextAreaElement>("suggestionInput");
  const suggestion = input.value.trim();
  if (!suggestion) {
    toast("Write a suggestion first", true);
    return;
  }
  const scope = el<HTMLInputElement>("scopeToggle").checked ? "quiz_wide" : "single";
  chatTurns.push({ author: "teacher", text: `${suggestion} [${scope}]` });
  el<HTMLDivElement>("chatPanel").innerHTML = renderChat(chatTurns);
  try {
    const response = await client.revise(currentVersion.id, suggestion, scope);
    chatTurns.push({
      author: "system",
      text: `revised ${response.revised.length} answer(s), ` +
        `${response.failures.length} failure(s)`,
    });
    el<HTMLDivElement>("chatPanel").innerHTML = renderChat(chatTurns);
    el<HTMLDivElement>("revisionBadges").innerHTML = renderRevisionOutcome(response);
    const mine = response.revised.find((v) => v.answer_id === currentAnswerId);
    if (mine && currentVersion) {
      previousVersion = currentVersion;
      currentVersion = mine;
      el<HTMLDivElement>("diffPanel").innerHTML =
        renderCommentDiff(previousVersion, mine);
      const envelope = await client.feedback(currentAnswerId);
      el<HTMLDivElement>("feedbackDetail").innerHTML = renderTeacherFeedback(envelope);
    }
    input.value = "";
  } catch (err) {
    toast(err instanceof ApiError ? err.message : String(err), true);
  }
}

// -- student view -------------------------------------------------------------

async function showStudent(): Promise<void> {
  show("studentView");
  try {
    const data = await client.quiz(DEMO_QUIZ_ID);
    const question = data.questions[0];
    el<HTMLParagraphElement>("questionText").textContent =
      `${question.prompt_text} (${question.max_marks} marks)`;
    el<HTMLButtonElement>("submitAnswer").onclick = () => {
      void submitStudentAnswer(question.id);
    };
  } catch (err) {
    toast(err instanceof ApiError ? err.message : String(err), true);
  }
}

async function submitStudentAnswer(questionId: string): Promise<void> {
  const textarea = el<HTMLTextAreaElement>("answerInput");
  const text = textarea.value.trim();
  if (!text) {
    toast("Write an answer before submitting", true);
    return;
  }
  const panel = el<HTMLDivElement>("studentFeedback");
  try {
    const { answer_id } = await client.submitAnswer(
      DEMO_QUIZ_ID, questionId, text, crypto.randomUUID(),
    );
    panel.innerHTML = renderStudentFeedback({ status: "pending", feedback: null });
    const envelope = await pollFeedback(client, answer_id);
    panel.innerHTML = renderStudentFeedback(envelope);
  } catch (err) {
    if (err instanceof ApiError && err.status === 409) {
      toast("You already answered this question", true);
      return;
    }
    toast(err instanceof ApiError ? err.message : String(err), true);
  }
}

el<HTMLButtonElement>("loginBtn").onclick = () => {
  void login();
};
el<HTMLInputElement>("tokenInput").addEventListener("keydown", (event) => {
  if (event.key === "Enter") void login();
});
