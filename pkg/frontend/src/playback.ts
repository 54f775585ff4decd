/**
 * Swap an audio element's buffer without losing the listening position.
 *
 * Typed against a minimal structural interface so the logic is testable
 * off-DOM; an HTMLAudioElement satisfies it as-is.
 */
export interface AudioLike {
  src: string;
  currentTime: number;
  readonly paused: boolean;
  play(): Promise<void> | void;
  addEventListener(
    type: "loadedmetadata",
    listener: () => void,
    options?: { once: boolean },
  ): void;
}

export function swapAudioSource(
  audio: AudioLike,
  url: string,
  revoke: (oldUrl: string) => void = () => {},
): void {
  const position = audio.currentTime;
  const wasPlaying = !audio.paused;
  const oldUrl = audio.src;

  audio.addEventListener(
    "loadedmetadata",
    () => {
      audio.currentTime = position;
      if (wasPlaying) void audio.play();
      if (oldUrl) revoke(oldUrl);
    },
    { once: true },
  );
  audio.src = url;
}
