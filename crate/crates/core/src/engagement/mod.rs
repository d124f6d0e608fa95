//! Keeping the user engaged during long tasks: "people also ask" offers
//! and open chit-chat with a way back to the task.

mod chitchat;
mod pak;

pub use chitchat::{
    AliensMonologue, Category, ChitChat, ChitChatConfig, ChitChatError, ChitChatReply,
    ChitChatState, Generator, WikiEntry,
};
pub use pak::{PakPair, PakSelector, PakStore};
