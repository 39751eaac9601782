use std::collections::BTreeMap;

use rand_chacha::ChaCha8Rng;
use tracemap_core::Capability;

use crate::clock::VirtualClock;
use crate::interp::Value;
use crate::PennyError;

/// State a command handler may touch: the shared virtual clock (handlers
/// blocking on resources advance it), the run's seeded generator, and the
/// execution log.
pub struct CommandCtx<'a> {
    pub clock: &'a mut VirtualClock,
    pub rng: &'a mut ChaCha8Rng,
    pub log: &'a mut Vec<String>,
}

pub type Handler = Box<dyn FnMut(&mut CommandCtx<'_>, &[Value]) -> Result<Value, PennyError>>;

pub(crate) struct CommandSpec {
    pub arity: usize,
    pub capability: Option<Capability>,
    pub cost_secs: u64,
    pub handler: Handler,
}

/// Named commands a script can invoke. Measurement modules register their
/// commands here; a script calling an unregistered command fails at
/// execution, not at parse, since modules are installed on subsets of
/// agents.
#[derive(Default)]
pub struct CommandRegistry {
    commands: BTreeMap<String, CommandSpec>,
}

impl CommandRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// Register a command. `cost_secs` is charged on the virtual clock
    /// per invocation; `capability` gates execution per agent.
    pub fn register(
        &mut self,
        name: &str,
        arity: usize,
        capability: Option<Capability>,
        cost_secs: u64,
        handler: Handler,
    ) -> Result<(), PennyError> {
        if self.commands.contains_key(name) {
            return Err(PennyError::DuplicateCommand(name.to_string()));
        }
        self.commands.insert(
            name.to_string(),
            CommandSpec {
                arity,
                capability,
                cost_secs,
                handler,
            },
        );
        Ok(())
    }

    pub fn contains(&self, name: &str) -> bool {
        self.commands.contains_key(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.commands.keys().map(String::as_str)
    }

    pub(crate) fn get_mut(&mut self, name: &str) -> Option<&mut CommandSpec> {
        self.commands.get_mut(name)
    }
}

impl std::fmt::Debug for CommandRegistry {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CommandRegistry")
            .field("commands", &self.commands.keys().collect::<Vec<_>>())
            .finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicate_registration_rejected() {
        let mut reg = CommandRegistry::new();
        reg.register("Ping", 1, None, 0, Box::new(|_, _| Ok(Value::Num(0.into()))))
            .unwrap();
        let err = reg
            .register("Ping", 1, None, 0, Box::new(|_, _| Ok(Value::Num(0.into()))))
            .unwrap_err();
        assert_eq!(err, PennyError::DuplicateCommand("Ping".into()));
    }
}
