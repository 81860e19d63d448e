// Wire types of the annotation service (JSON over HTTP).

export type QuestionKind = "which_one" | "is_in";

export interface QuestionPayload {
  instance_id: string;
  qtype: QuestionKind;
  I: number;
  question_classes: number[];
  image?: string; // base64 PNG
}

export interface SessionStats {
  answered: number;
  remaining: number;
  label_size_histogram: Record<string, number>;
}

export type AnswerBody =
  | { kind: "chose"; chosen: number }
  | { kind: "not_included" }
  | { kind: "yes" }
  | { kind: "no" };

export interface AnswerResponse {
  qa_label: number[];
}
