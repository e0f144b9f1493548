#pragma once

namespace trajllm {

// Full maze task description, with the trajectory slot marked by the
// placeholder pair. Used as the default prompt for analysis runs and
// available to training via config.
extern const char* kMazeTaskPrompt;

// Short prompt used as the training/rollout default; keeps fused sequences
// small so desk-scale runs stay fast.
extern const char* kCompactMazePrompt;

// Semantically null probe input for the attention analysis.
extern const char* kNullProbeString;

}  // namespace trajllm
