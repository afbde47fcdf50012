use std::fmt;

/// A failure caused by the user's input or invocation; exits with code 2.
#[derive(Debug)]
pub struct InputError(pub String);

impl fmt::Display for InputError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for InputError {}

pub fn input_error(msg: impl Into<String>) -> anyhow::Error {
    InputError(msg.into()).into()
}

pub trait InputContext<T> {
    /// Marks the error as an input error, prefixed with `what`.
    fn input(self, what: impl fmt::Display) -> anyhow::Result<T>;
}

impl<T, E: fmt::Display> InputContext<T> for Result<T, E> {
    fn input(self, what: impl fmt::Display) -> anyhow::Result<T> {
        self.map_err(|e| input_error(format!("{what}: {e}")))
    }
}

pub fn exit_code(err: &anyhow::Error) -> u8 {
    if err.chain().any(|e| e.is::<InputError>()) {
        2
    } else {
        1
    }
}
