// Incremental server-sent-event parser with last-event-id resumption.
// Works on raw text chunks so it runs identically in the browser (fetch
// streaming) and under node in the tests.

export interface StreamEvent {
  id: number | null;
  event: string;
  data: string;
}

export class SseParser {
  private buffer = "";
  lastEventId: number | null = null;

  feed(chunk: string): StreamEvent[] {
    this.buffer += chunk;
    const events: StreamEvent[] = [];
    let split: number;
    while ((split = this.buffer.indexOf("\n\n")) >= 0) {
      const block = this.buffer.slice(0, split);
      this.buffer = this.buffer.slice(split + 2);
      const event = parseBlock(block);
      if (event) {
        if (event.id !== null) this.lastEventId = event.id;
        events.push(event);
      }
    }
    return events;
  }
}

function parseBlock(block: string): StreamEvent | null {
  let id: number | null = null;
  let type = "message";
  const data: string[] = [];
  let sawField = false;
  for (const line of block.split("\n")) {
    if (line === "" || line.startsWith(":")) continue;
    sawField = true;
    const sep = line.indexOf(": ");
    const field = sep >= 0 ? line.slice(0, sep) : line;
    const value = sep >= 0 ? line.slice(sep + 2) : "";
    if (field === "id" && /^\d+$/.test(value)) id = Number(value);
    else if (field === "event") type = value;
    else if (field === "data") data.push(value);
  }
  if (!sawField) return null;
  return { id, event: type, data: data.join("\n") };
}

export function eventStreamPath(gameId: string, lastEventId: number | null): string {
  const base = `/games/${gameId}/events`;
  return lastEventId === null ? base : `${base}?lastEventId=${lastEventId}`;
}
