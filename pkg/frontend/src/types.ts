// Mirrors of the service response documents. The canonical JSON schemas of
// the backend are the contract; nothing here adds fields of its own.

export interface FeedbackItemDoc {
  concept_id: string;
  awarded_mark: number;
  comment: string;
}

export interface VerificationDoc {
  scores: Record<string, number>;
  justifications: Record<string, string>;
  verifier_model_id: string;
}

export interface FeedbackVersionDoc {
  id: string;
  answer_id: string;
  items: FeedbackItemDoc[];
  total_mark: number;
  verification: VerificationDoc | null;
  iteration: number;
  origin: string;
  parent_version_id: string | null;
  safety_passed: boolean;
  provenance: IterationRecordDoc[];
  safety_notes: string[];
}

export interface IterationRecordDoc {
  iteration: number;
  scores: Record<string, number> | null;
  generator_model_id: string;
  verifier_model_id: string;
  generator_budget: string;
  latency_seconds: number;
  note: string;
}

export interface AssessmentConceptDoc {
  concept_id: string;
  description: string;
  weight: number;
  matched: boolean;
  evidence: string;
}

export interface AssessmentDoc {
  answer_id: string;
  concepts: AssessmentConceptDoc[];
  raw_score: number;
  prompt_score: number;
  reflection_triggered: boolean;
  reflection_rounds: number;
  expression_flag: number;
  final_score: number;
}

export type FeedbackStatus =
  | "pending"
  | "pending_review"
  | "ready"
  | "withheld"
  | "failed";

export interface FeedbackEnvelope {
  status: FeedbackStatus;
  feedback: FeedbackVersionDoc | null;
  assessment?: AssessmentDoc | null;
  expression_note?: string | null;
  error?: string | null;
}

export interface MasteryCellDoc {
  student_id: string;
  topic_id: string;
  attempts: number;
  mean_normalised_score: number;
  trend: number;
}

export interface AttentionFlagDoc {
  answer_id: string;
  reason: string;
}

export interface QuestionDoc {
  id: string;
  prompt_text: string;
  topics: string[];
  max_marks: number;
  source: string;
}

export interface QuizEnvelope {
  quiz: { id: string; group_id: string; question_ids: string[] };
  questions: QuestionDoc[];
}

export interface ReviseResponse {
  revised: FeedbackVersionDoc[];
  failures: { answer_id: string; error: string }[];
}

export interface MeResponse {
  id: string;
  role: "teacher" | "student";
  name: string;
  groups: string[];
}

export interface ChatTurn {
  author: "teacher" | "system";
  text: string;
}
