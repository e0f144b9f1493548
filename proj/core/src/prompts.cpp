#include "trajllm/prompts.hpp"

namespace trajllm {

const char* kMazeTaskPrompt =
    "You are a maze navigation expert. Your goal is to reach the destination "
    "from your current position using the fewest steps possible. You receive a "
    "reward of +1 for reaching the destination; all other positions have a "
    "reward of 0. You need to choose the optimal movement to maximize the "
    "total reward. Each state at every time step is represented by four values "
    "[x, y, vx, vy]:\n"
    "- (x, y) represents the current position coordinates\n"
    "- (vx, vy) represents the current velocity\n"
    "- All values range from [-1.0, 1.0].\n"
    "The action at each time step is a 2D vector: [ax, ay]\n"
    "- ax represents the control force (acceleration) applied in the x-axis "
    "direction\n"
    "- ay represents the control force applied in the y-axis direction\n"
    "- All values range from [-1.0, 1.0].\n"
    "Each step has a corresponding \"Returns-to-Go\" value, a scalar "
    "representing the expected cumulative reward from the current time step to "
    "the end of the trajectory.\n"
    "You will receive trajectory information, including the state sequence, "
    "action sequence, and Returns-to-Go sequence for a complete episode, "
    "formatted as follows:<|traj_begin|><|traj_end|>\n"
    "Your task is to learn a policy based on this trajectory data: given the "
    "current state and its corresponding Returns-to-Go, predict the optimal "
    "action a to take at that time step.\n"
    "Please explain your understanding of the current policy and output the "
    "corresponding action value, along with an explanation.";

const char* kCompactMazePrompt =
    "You are a maze navigation expert. <|traj_begin|><|traj_end|> predict the "
    "optimal action to take at that time step.";

const char* kNullProbeString = "z$x-\xce\xb1\xce\xb2hwoqa%^&*()<>?:\"";

}  // namespace trajllm
