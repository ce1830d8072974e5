import { describe, expect, it } from "vitest";

import { ApiClient } from "../src/client.js";
import { ConsoleViewModel, cssColor } from "../src/model.js";
import { Reply, fakeFetch, makeDeviceState, makeRecord } from "./fakes.js";

function vmWith(handler: (url: string, method: string, body: unknown) => Reply) {
  return new ConsoleViewModel(new ApiClient("", fakeFetch(handler)));
}

describe("submit", () => {
  it("is disabled for empty or whitespace input", () => {
    const vm = vmWith(() => ({ status: 200, json: makeRecord() }));
    expect(vm.canSubmit).toBe(false);
    vm.requestText = "   ";
    expect(vm.canSubmit).toBe(false);
    vm.requestText = "I need a bright orange";
    expect(vm.canSubmit).toBe(true);
  });

  it("renders swatches and matched badge from API values only", async () => {
    const record = makeRecord();
    const vm = vmWith(() => ({ status: 200, json: record }));
    vm.requestText = "I need a bright orange";
    await vm.submit();
    expect(vm.current).not.toBeNull();
    // the three swatch sources are the verbatim API triples
    expect(vm.current!.target).toEqual(record.target);
    expect(vm.current!.plan.predicted).toEqual(record.plan.predicted);
    expect(vm.current!.achieved).toEqual(record.achieved);
    expect(vm.current!.matched).toBe(true);
    expect(vm.history).toHaveLength(1);
    expect(vm.banner).toBeNull();
  });

  it("surfaces API error codes as a banner and keeps history clean", async () => {
    const vm = vmWith(() => ({
      status: 400,
      json: { error: { code: "NO_COLOR_FOUND", message: "no color in request" } },
    }));
    vm.requestText = "flurp";
    await vm.submit();
    expect(vm.banner).toEqual({
      code: "NO_COLOR_FOUND",
      message: "no color in request",
    });
    expect(vm.current).toBeNull();
    expect(vm.history).toHaveLength(0);
  });

  it("clears the banner on the next successful run", async () => {
    let fail = true;
    const vm = vmWith(() =>
      fail
        ? { status: 400, json: { error: { code: "NO_COLOR_FOUND", message: "x" } } }
        : { status: 200, json: makeRecord() },
    );
    vm.requestText = "flurp";
    await vm.submit();
    expect(vm.banner?.code).toBe("NO_COLOR_FOUND");
    fail = false;
    vm.requestText = "cyan";
    await vm.submit();
    expect(vm.banner).toBeNull();
  });
});

describe("adjust", () => {
  it("is disabled before any run and while pending", () => {
    const vm = vmWith(() => ({ status: 200, json: makeRecord() }));
    expect(vm.canAdjust).toBe(false);
    vm.current = makeRecord();
    expect(vm.canAdjust).toBe(true);
    vm.pending = true;
    expect(vm.canAdjust).toBe(false);
  });

  it("posts the current run id and prepends the new record", async () => {
    const darkened = makeRecord({
      id: 2,
      request_text: "I need a bright orange dark",
      target: [0.6, 0.388, 0.0],
    });
    let adjustBody: unknown = null;
    const vm = vmWith((url, _method, body) => {
      if (url === "/api/adjust") {
        adjustBody = body;
        return { status: 200, json: darkened };
      }
      return { status: 200, json: makeRecord() };
    });
    vm.requestText = "I need a bright orange";
    await vm.submit();
    await vm.adjust("dark");
    expect(adjustBody).toEqual({ run_id: 1, modifier: "dark" });
    expect(vm.history.map((r) => r.id)).toEqual([2, 1]);
    expect(vm.current!.target).toEqual([0.6, 0.388, 0.0]);
  });

  it("shows a banner when the run id is stale", async () => {
    const vm = vmWith((url) =>
      url === "/api/adjust"
        ? { status: 404, json: { error: { code: "NO_SUCH_RUN", message: "gone" } } }
        : { status: 200, json: makeRecord() },
    );
    vm.requestText = "cyan";
    await vm.submit();
    await vm.adjust("dark");
    expect(vm.banner?.code).toBe("NO_SUCH_RUN");
    expect(vm.history).toHaveLength(1);
  });
});

describe("polling and offline state", () => {
  it("reflects busy and reservoir gauges from /api/state", async () => {
    const vm = vmWith(() => ({
      status: 200,
      json: makeDeviceState({ busy: true, reservoirs: [97.5, 98.5, 99.0] }),
    }));
    await vm.pollState();
    expect(vm.deviceState!.busy).toBe(true);
    expect(vm.deviceState!.reservoirs).toEqual([97.5, 98.5, 99.0]);
    expect(vm.offline).toBe(false);
  });

  it("sets the offline badge when the server is unreachable", async () => {
    const vm = vmWith(() => ({ reject: true }));
    await vm.pollState();
    expect(vm.offline).toBe(true);
  });

  it("recovers from offline once the server answers again", async () => {
    let down = true;
    const vm = vmWith(() =>
      down ? { reject: true } : { status: 200, json: makeDeviceState() },
    );
    await vm.pollState();
    expect(vm.offline).toBe(true);
    down = false;
    await vm.pollState();
    expect(vm.offline).toBe(false);
  });

  it("marks offline on a failed mix too", async () => {
    const vm = vmWith(() => ({ reject: true }));
    vm.requestText = "cyan";
    await vm.submit();
    expect(vm.offline).toBe(true);
    expect(vm.banner?.code).toBe("OFFLINE");
  });
});

describe("loadHistory", () => {
  it("shows newest first and selects the latest run", async () => {
    const records = [makeRecord({ id: 1 }), makeRecord({ id: 2 })];
    const vm = vmWith(() => ({ status: 200, json: records }));
    await vm.loadHistory();
    expect(vm.history.map((r) => r.id)).toEqual([2, 1]);
    expect(vm.current!.id).toBe(2);
  });
});

describe("cssColor", () => {
  it("renders the API triple verbatim at 8-bit scale", () => {
    expect(cssColor([1, 0.647, 0])).toBe("rgb(255, 165, 0)");
    expect(cssColor([0, 0, 0])).toBe("rgb(0, 0, 0)");
  });
});
