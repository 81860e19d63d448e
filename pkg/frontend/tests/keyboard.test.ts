import { describe, expect, it } from "vitest";

import type { AnnotationApi } from "../src/api.js";
import { AnnotationController } from "../src/controller.js";
import { actionForKey } from "../src/keyboard.js";
import type { QuestionPayload } from "../src/types.js";

function staticApi(question: QuestionPayload): AnnotationApi {
  return {
    createSession: async () => "tok",
    getQuestion: async () => question,
    submitAnswer: async () => ({ qa_label: [1] }),
    getStats: async () => ({ answered: 0, remaining: 1, label_size_histogram: {} }),
  };
}

describe("keyboard shortcuts", () => {
  it("digits map only to displayed classes; N is not-included", async () => {
    const c = new AnnotationController(
      staticApi({ instance_id: "0", qtype: "which_one", I: 3, question_classes: [2, 5, 8] }),
    );
    await c.startSession("which_one", 3);
    expect(actionForKey(c, "5")).not.toBeNull();
    expect(actionForKey(c, "4")).toBeNull(); // class 4 not displayed
    expect(actionForKey(c, "n")).not.toBeNull();
    expect(actionForKey(c, "N")).not.toBeNull();
    expect(actionForKey(c, "y")).toBeNull(); // is-in verb
  });

  it("is-in only accepts y and n", async () => {
    const c = new AnnotationController(
      staticApi({ instance_id: "0", qtype: "is_in", I: 2, question_classes: [1, 2] }),
    );
    await c.startSession("is_in", 2);
    expect(actionForKey(c, "y")).not.toBeNull();
    expect(actionForKey(c, "n")).not.toBeNull();
    expect(actionForKey(c, "1")).toBeNull();
  });

  it("no actions while idle or submitting", () => {
    const c = new AnnotationController(
      staticApi({ instance_id: "0", qtype: "is_in", I: 2, question_classes: [1, 2] }),
    );
    expect(actionForKey(c, "y")).toBeNull();
  });
});
