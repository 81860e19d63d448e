// UI state machine for one annotation session.
//
// All user actions funnel through submit(): a single in-flight request at
// a time, answers restricted to what the current question displays, so the
// client can never send an answer the server would reject as a protocol
// violation.  The DOM layer and the scripted-annotator tests drive exactly
// the same methods.

import { ApiError, type AnnotationApi } from "./api.js";
import type { AnswerBody, QuestionKind, QuestionPayload, SessionStats } from "./types.js";

export type Phase =
  | "idle" // no session yet
  | "starting"
  | "question" // a question is displayed, input enabled
  | "submitting" // answer in flight, input disabled
  | "done" // queue exhausted, completion screen
  | "error"; // banner + retry affordance

export interface UiState {
  phase: Phase;
  qtype: QuestionKind | null;
  items: number;
  sessionId: string | null;
  question: QuestionPayload | null;
  lastLabel: number[] | null; // label assigned by the previous answer
  notice: string | null; // transient message ("invalid choice", ...)
  error: string | null; // banner text in the error phase
  stats: SessionStats | null;
}

export interface ButtonSpec {
  id: string;
  label: string;
  hotkey: string | null;
  action: AnswerBody;
}

export interface ControllerOptions {
  /** retries for the idempotent question GET after a network failure */
  maxGetRetries?: number;
  retryDelayMs?: number;
}

const sleep = (ms: number) => new Promise((r) => setTimeout(r, ms));

export class AnnotationController {
  private state: UiState = {
    phase: "idle",
    qtype: null,
    items: 0,
    sessionId: null,
    question: null,
    lastLabel: null,
    notice: null,
    error: null,
    stats: null,
  };
  private listeners: Array<(s: UiState) => void> = [];
  private inflight = false;
  private maxGetRetries: number;
  private retryDelayMs: number;

  constructor(
    private api: AnnotationApi,
    options: ControllerOptions = {},
  ) {
    this.maxGetRetries = options.maxGetRetries ?? 3;
    this.retryDelayMs = options.retryDelayMs ?? 400;
  }

  getState(): UiState {
    return { ...this.state };
  }

  subscribe(fn: (s: UiState) => void): () => void {
    this.listeners.push(fn);
    return () => {
      this.listeners = this.listeners.filter((f) => f !== fn);
    };
  }

  private update(patch: Partial<UiState>): void {
    this.state = { ...this.state, ...patch };
    for (const fn of this.listeners) fn(this.getState());
  }

  /** Buttons to render: exactly the displayed question classes plus the
   *  procedure's fixed alternatives. */
  buttons(): ButtonSpec[] {
    const q = this.state.question;
    if (!q) return [];
    if (q.qtype === "which_one") {
      const classButtons: ButtonSpec[] = q.question_classes.map((c) => ({
        id: `class-${c}`,
        label: `class ${c}`,
        hotkey: c <= 9 ? String(c) : null,
        action: { kind: "chose", chosen: c },
      }));
      return [
        ...classButtons,
        { id: "not-included", label: "not included", hotkey: "n", action: { kind: "not_included" } },
      ];
    }
    return [
      { id: "yes", label: "yes", hotkey: "y", action: { kind: "yes" } },
      { id: "no", label: "no", hotkey: "n", action: { kind: "no" } },
    ];
  }

  questionText(): string {
    const q = this.state.question;
    if (!q) return "";
    const classes = q.question_classes.join(", ");
    return q.qtype === "which_one"
      ? `Which one of {${classes}} is this?`
      : `Is this one of {${classes}}?`;
  }

  async startSession(qtype: QuestionKind, items: number): Promise<void> {
    if (this.inflight) return;
    this.inflight = true;
    this.update({ phase: "starting", qtype, items, error: null, notice: null });
    try {
      const sessionId = await this.api.createSession(qtype, items);
      this.update({ sessionId });
    } catch (err) {
      // invalid spec or unreachable server: banner, no session
      this.update({ phase: "error", sessionId: null, error: describe(err) });
      this.inflight = false;
      return;
    }
    this.inflight = false;
    await this.loadNext();
  }

  /** Fetch the pending question (idempotent; also the page-refresh and
   *  network-recovery path). */
  async loadNext(): Promise<void> {
    const { sessionId } = this.state;
    if (!sessionId || this.inflight) return;
    this.inflight = true;
    try {
      let question: QuestionPayload | null = null;
      for (let attempt = 0; ; attempt++) {
        try {
          question = await this.api.getQuestion(sessionId);
          break;
        } catch (err) {
          if (err instanceof ApiError || attempt >= this.maxGetRetries) throw err;
          await sleep(this.retryDelayMs);
        }
      }
      if (question === null) {
        const stats = await this.api.getStats(sessionId);
        this.update({ phase: "done", question: null, stats });
      } else {
        const stats = await this.api.getStats(sessionId);
        this.update({ phase: "question", question, stats, error: null });
      }
    } catch (err) {
      this.update({ phase: "error", error: describe(err) });
    } finally {
      this.inflight = false;
    }
  }

  /** Which-one: pick a displayed class. Rejected locally if not displayed. */
  async choose(classId: number): Promise<void> {
    const q = this.state.question;
    if (!q || q.qtype !== "which_one") return;
    if (!q.question_classes.includes(classId)) {
      this.update({ notice: `class ${classId} is not offered` });
      return;
    }
    await this.submit({ kind: "chose", chosen: classId });
  }

  async answerNotIncluded(): Promise<void> {
    if (this.state.question?.qtype === "which_one") await this.submit({ kind: "not_included" });
  }

  async answerYes(): Promise<void> {
    if (this.state.question?.qtype === "is_in") await this.submit({ kind: "yes" });
  }

  async answerNo(): Promise<void> {
    if (this.state.question?.qtype === "is_in") await this.submit({ kind: "no" });
  }

  private async submit(answer: AnswerBody): Promise<void> {
    const { sessionId, question, phase } = this.state;
    if (!sessionId || !question || phase !== "question" || this.inflight) return;
    this.inflight = true;
    this.update({ phase: "submitting", notice: null });
    try {
      const resp = await this.api.submitAnswer(sessionId, question.instance_id, answer);
      this.update({ lastLabel: resp.qa_label });
      this.inflight = false;
      await this.loadNext();
    } catch (err) {
      this.inflight = false;
      if (err instanceof ApiError && err.status === 422) {
        // stay on the same question
        this.update({ phase: "question", notice: `invalid choice: ${err.detail}` });
      } else if (err instanceof ApiError) {
        this.update({ phase: "error", error: describe(err) });
      } else {
        // network failure: the POST may or may not have landed; the
        // idempotent GET resynchronizes either way
        await this.loadNext();
      }
    }
  }

  /** Retry affordance in the error phase. */
  async retry(): Promise<void> {
    if (this.state.sessionId) {
      await this.loadNext();
    } else if (this.state.qtype) {
      await this.startSession(this.state.qtype, this.state.items);
    } else {
      this.update({ phase: "idle", error: null });
    }
  }
}

function describe(err: unknown): string {
  if (err instanceof ApiError) return err.message;
  if (err instanceof Error) return `network failure: ${err.message}`;
  return String(err);
}
