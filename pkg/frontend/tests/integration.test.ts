// End-to-end: a scripted annotator drives the real UI answer path (the
// same controller methods the buttons invoke) against the real HTTP
// service, labels 200 instances, and the persisted events are validated
// by the backend's own store reader.

import { execFileSync, spawn, type ChildProcess } from "node:child_process";
import { mkdtempSync, rmSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import { AnnotationController } from "../src/controller.js";

const PORT = 8931;
const BASE = `http://127.0.0.1:${PORT}`;
const K = 10;
const ITEMS = 3;
const TARGET = 200;

function pythonAvailable(): boolean {
  try {
    execFileSync("python3", ["-c", "import qalabel"], { stdio: "ignore" });
    return true;
  } catch {
    return false;
  }
}

const HAVE_PYTHON = pythonAvailable();

describe.skipIf(!HAVE_PYTHON)("scripted annotator against the live service", () => {
  let server: ChildProcess;
  let workdir: string;
  let eventsPath: string;

  beforeAll(async () => {
    workdir = mkdtempSync(join(tmpdir(), "qalabel-ui-"));
    eventsPath = join(workdir, "events.jsonl");
    server = spawn(
      "python3",
      [
        "-m", "qalabel.cli", "serve",
        "--synthetic",
        "--blob-classes", String(K),
        "--blob-dim", "9",
        "--blob-per-class", "30",
        "--port", String(PORT),
        "--seed", "5",
        "--events", eventsPath,
      ],
      { stdio: ["ignore", "pipe", "pipe"] },
    );
    // drain the log pipes so uvicorn never blocks on a full buffer
    server.stdout?.resume();
    server.stderr?.resume();
    const deadline = Date.now() + 30_000;
    for (;;) {
      try {
        const resp = await fetch(`${BASE}/api/stats?session=probe`);
        if (resp.status === 404) break; // server is answering
      } catch {
        // not up yet
      }
      if (Date.now() > deadline) throw new Error("annotation service did not start");
      await new Promise((r) => setTimeout(r, 250));
    }
  }, 40_000);

  afterAll(async () => {
    server?.kill("SIGTERM");
    await new Promise((r) => setTimeout(r, 300));
    server?.kill("SIGKILL");
    rmSync(workdir, { recursive: true, force: true });
  });

  it(
    "labels 200 instances; events validate and singletons match I/K",
    async () => {
      const controller = new AnnotationController(new ApiClient(BASE));
      await controller.startSession("which_one", ITEMS);
      expect(controller.getState().phase).toBe("question");

      let answered = 0;
      while (answered < TARGET) {
        const state = controller.getState();
        expect(state.phase).toBe("question");
        const q = state.question!;
        expect(q.question_classes).toHaveLength(ITEMS);
        // the scripted annotator's inferred class for this instance
        const z = (Number(q.instance_id) % K) + 1;
        if (q.question_classes.includes(z)) {
          await controller.choose(z);
        } else {
          await controller.answerNotIncluded();
        }
        answered += 1;
        const after = controller.getState();
        expect(after.lastLabel).not.toBeNull();
        expect(after.lastLabel!).toContain(z); // inferred class never excluded
        expect(after.stats?.answered).toBe(answered);
      }

      // label-size histogram: singleton fraction approximates I/K
      const hist = controller.getState().stats!.label_size_histogram;
      const singles = hist["1"] ?? 0;
      const others = hist[String(K - ITEMS)] ?? 0;
      expect(singles + others).toBe(TARGET);
      const p = ITEMS / K;
      const se = Math.sqrt((p * (1 - p)) / TARGET);
      expect(Math.abs(singles / TARGET - p)).toBeLessThanOrEqual(3 * se);

      // every persisted event passes the backend's step-3 validation
      const out = execFileSync(
        "python3",
        [
          "-c",
          [
            "import sys",
            "from qalabel.data_io import read_events",
            "from qalabel.combinatorics import ClassSpace",
            `events = read_events(sys.argv[1], ClassSpace(${K}))`,
            `assert len(events) == ${TARGET}, len(events)`,
            "assert all(e.origin == 'human' for e in events)",
            `assert all(e.items == ${ITEMS} for e in events)`,
            "print('validated', len(events))",
          ].join("\n"),
          eventsPath,
        ],
        { encoding: "utf-8" },
      );
      expect(out).toContain(`validated ${TARGET}`);
    },
    120_000,
  );
});
