/** Promise-based client for the JSON wire protocol over WebSocket.
 *
 * The WebSocket constructor is injectable so the same client runs on the
 * browser's native implementation and on `ws` under node in tests.
 */

export interface WireErrorBody {
  code: number;
  message: string;
}

export class WireError extends Error {
  readonly code: number;

  constructor(body: WireErrorBody) {
    super(body.message);
    this.code = body.code;
  }
}

interface SocketLike {
  send(data: string): void;
  close(): void;
  addEventListener(type: string, listener: (event: any) => void): void;
}

export type SocketFactory = (url: string) => SocketLike;

type Pending = {
  resolve: (value: unknown) => void;
  reject: (error: Error) => void;
};

export class WireClient {
  private socket: SocketLike;
  private pending = new Map<string, Pending>();
  private seq = 0;
  private eventHandlers: Array<(channel: string, payload: unknown) => void> = [];
  private closeHandlers: Array<() => void> = [];
  private openPromise: Promise<void>;

  constructor(url: string, factory?: SocketFactory) {
    const make: SocketFactory =
      factory ?? ((u) => new (globalThis as any).WebSocket(u) as SocketLike);
    this.socket = make(url);
    this.openPromise = new Promise((resolve, reject) => {
      this.socket.addEventListener("open", () => resolve());
      this.socket.addEventListener("error", () =>
        reject(new Error(`cannot connect to ${url}`)),
      );
    });
    this.socket.addEventListener("message", (event: { data: unknown }) => {
      this.onMessage(String(event.data));
    });
    this.socket.addEventListener("close", () => {
      const error = new Error("connection closed");
      for (const waiter of this.pending.values()) waiter.reject(error);
      this.pending.clear();
      for (const handler of this.closeHandlers) handler();
    });
  }

  async ready(): Promise<void> {
    return this.openPromise;
  }

  onEvent(handler: (channel: string, payload: unknown) => void): void {
    this.eventHandlers.push(handler);
  }

  onClose(handler: () => void): void {
    this.closeHandlers.push(handler);
  }

  close(): void {
    this.socket.close();
  }

  call<T = unknown>(method: string, params: Record<string, unknown> = {}): Promise<T> {
    this.seq += 1;
    const id = `w${this.seq}`;
    const frame = JSON.stringify({ id, method, params });
    return new Promise<T>((resolve, reject) => {
      this.pending.set(id, { resolve: resolve as (v: unknown) => void, reject });
      try {
        this.socket.send(frame);
      } catch (error) {
        this.pending.delete(id);
        reject(error instanceof Error ? error : new Error(String(error)));
      }
    });
  }

  private onMessage(raw: string): void {
    let message: any;
    try {
      message = JSON.parse(raw);
    } catch {
      return; // a malformed server frame is unrecoverable noise
    }
    if (message.channel !== undefined) {
      for (const handler of this.eventHandlers) handler(message.channel, message.payload);
      return;
    }
    const waiter = this.pending.get(message.id);
    if (waiter === undefined) return;
    this.pending.delete(message.id);
    if (message.error !== undefined) {
      waiter.reject(new WireError(message.error as WireErrorBody));
    } else {
      waiter.resolve(message.result);
    }
  }
}
